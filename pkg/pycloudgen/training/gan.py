"""Stage two: WGAN-GP training of the mapping network against a point-cloud critic,
with the pretrained decoder held fixed."""

# Standard library imports
import logging
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable, Iterator, Optional

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Tensor, backward, input_gradient_node, no_grad
from pycloudgen.autodiff.ops import mean, mul, sqrt, sum as tensor_sum
from pycloudgen.data.dataset import CloudDataset
from pycloudgen.networks.decoder import Decoder
from pycloudgen.networks.generator import sample_prior
from pycloudgen.networks.mapper import Mapper
from pycloudgen.networks.network import Network
from pycloudgen.training.configs import StageTwoConfig
from pycloudgen.training.optimizers import AdamState, adam_step
from pycloudgen.utils.exceptions import FrozenDecoderError, NonFiniteLossError, ShapeMismatchError

logger = logging.getLogger(__name__)

Critic = Callable[[Tensor], Tensor]


@dataclass
class GanEpochStats:
    """Summary of one WGAN-GP epoch.

    Attributes:
        wasserstein (float): mean of E[D(real)] - E[D(fake)] over critic steps.
        gp (float): mean gradient penalty over critic steps.
        d_loss (float): mean critic loss.
        g_loss (float): mean generator loss.
        d_steps (int): critic updates performed.
        g_steps (int): generator updates performed.
    """

    epoch: int
    wasserstein: float
    gp: float
    d_loss: float
    g_loss: float
    d_steps: int
    g_steps: int
    seconds: float

    def as_row(self) -> dict[str, float]:
        return asdict(self)


@dataclass
class GanOptimizers:
    critic: AdamState
    generator: AdamState

    @classmethod
    def from_config(cls, cfg: StageTwoConfig) -> "GanOptimizers":
        return cls(AdamState(lr=cfg.lr, betas=cfg.betas), AdamState(lr=cfg.lr, betas=cfg.betas))


def gradient_penalty(critic: Critic, real: np.ndarray, fake: np.ndarray, weight: float, rng: np.random.Generator) -> Tensor:
    """Penalty weight * mean((||grad_x D(x_hat)||_2 - 1)^2) on random interpolates.

    Each pair (real[i], fake[i]) is mixed with one u ~ U(0, 1) for the whole cloud. The
    returned scalar is differentiable with respect to the critic's parameters.

    Args:
        critic (Critic): maps [B, N, 3] clouds to [B] scores; samples must not interact.
        real (np.ndarray): real clouds [B, N, 3].
        fake (np.ndarray): generated clouds [B, N, 3].
        weight (float): penalty weight lambda.
        rng (np.random.Generator): draws the mixing weights.

    Returns:
        penalty (Tensor): scalar.

    Raises:
        ShapeMismatchError: if real and fake batches differ in shape.
        SecondOrderUnsupportedError: if the critic uses an op without second-order support.

    """
    # Argument checking
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.shape != fake.shape:
        raise ShapeMismatchError(f"real and fake batches differ: {real.shape} != {fake.shape}")

    batch = real.shape[0]
    u = rng.uniform(size=(batch,) + (1,) * (real.ndim - 1))
    interpolates = Tensor(u * real + (1.0 - u) * fake, requires_grad=True)

    scores = critic(interpolates)
    gradients = input_gradient_node(tensor_sum(scores), interpolates)
    squared = mul(gradients, gradients)
    norms = sqrt(tensor_sum(squared, tuple(range(1, squared.ndim))))
    deviation = norms - 1.0
    return mean(mul(deviation, deviation)) * weight


class RealBatchStream:
    """Endless batches of real clouds: each pass draws a fresh permutation and cuts it
    into batches, so no cloud repeats within a pass."""

    def __init__(self, dataset: CloudDataset, batch_size: int, rng: np.random.Generator):
        if len(dataset) < 2:
            raise ValueError(f"training needs at least two clouds (gave {len(dataset)})")
        self.dataset = dataset
        self.batch_size = min(batch_size, len(dataset))
        self.rng = rng
        self.__iterator = self.__batches()

    def __batches(self) -> Iterator[np.ndarray]:
        while True:
            yield from self.dataset.batches(self.batch_size, self.rng)

    def __iter__(self) -> "RealBatchStream":
        return self

    def __next__(self) -> np.ndarray:
        return self.dataset.clouds[next(self.__iterator)]

    @property
    def batches_per_pass(self) -> int:
        return max(1, len(self.dataset) // self.batch_size)


def _generator_params(mapper: Optional[Mapper], decoder: Decoder, cfg: StageTwoConfig) -> list:
    params = list(mapper.parameters()) if (mapper is not None and cfg.use_mapper) else []
    if cfg.decoder_trainable:
        params += decoder.parameters()
    return params


def _fake_clouds(mapper: Optional[Mapper], decoder: Decoder, w: np.ndarray, cfg: StageTwoConfig) -> Tensor:
    codes = mapper(w) if (mapper is not None and cfg.use_mapper) else Tensor(w)
    return decoder(codes)


def _check_frozen(decoder: Decoder) -> None:
    for parameter in decoder.parameters():
        if parameter.requires_grad or (parameter.grad is not None and np.any(parameter.grad != 0.0)):
            raise FrozenDecoderError(f"frozen decoder parameter '{parameter.name}' received a gradient")


def prepare_stage_two(decoder: Decoder, cfg: StageTwoConfig) -> None:
    """Freezes the pretrained decoder (eval mode, no gradients) or readies it for joint training."""
    if cfg.decoder_trainable:
        decoder.unfreeze()
        decoder.train()
    else:
        decoder.freeze()
        decoder.eval()


def train_gan_epoch(
    mapper: Optional[Mapper],
    decoder: Decoder,
    disc: Network,
    dataset: CloudDataset,
    cfg: StageTwoConfig,
    optimizers: GanOptimizers,
    epoch: int,
    rng: np.random.Generator,
    stream: Optional[RealBatchStream] = None,
) -> GanEpochStats:
    """Runs one WGAN-GP epoch.

    An iteration makes `d_steps_per_g` critic updates, each minimizing
    E[D(fake)] - E[D(real)] + GP on a fresh real batch and fresh prior draws, then one
    generator update minimizing -E[D(fake)]. An epoch has enough iterations for the
    critic to see about one pass over the real clouds.

    Args:
        mapper (Optional[Mapper]): mapping network (ignored when cfg.use_mapper is False).
        decoder (Decoder): decoder, frozen unless cfg makes it trainable.
        disc (Network): critic.
        dataset (CloudDataset): normalized real clouds.
        cfg (StageTwoConfig): training settings.
        optimizers (GanOptimizers): critic and generator Adam states.
        epoch (int): zero-based epoch index.
        rng (np.random.Generator): prior draws, interpolation weights and batching.
        stream (Optional[RealBatchStream]): real batch source kept across epochs.

    Returns:
        stats (GanEpochStats)

    Raises:
        FrozenDecoderError: if the frozen decoder receives a gradient.
        NonFiniteLossError: if a loss becomes NaN or Inf.

    """
    start = time.perf_counter()
    stream = stream if stream is not None else RealBatchStream(dataset, cfg.batch, rng)
    latent_dim = decoder.config.latent_dim
    prepare_stage_two(decoder, cfg)
    generator_params = _generator_params(mapper, decoder, cfg)
    if not generator_params:
        raise ValueError("stage two has nothing to train: enable the mapper or let the decoder train")
    if mapper is not None:
        mapper.train()
    disc.train()

    iterations = max(1, math.ceil(stream.batches_per_pass / cfg.d_steps_per_g))
    sums = {"wasserstein": 0.0, "gp": 0.0, "d_loss": 0.0, "g_loss": 0.0}
    d_steps = 0
    g_steps = 0

    for iteration in range(iterations):
        for _ in range(cfg.d_steps_per_g):
            real = next(stream)
            with no_grad():
                fake = _fake_clouds(mapper, decoder, sample_prior(len(real), latent_dim, rng), cfg).data

            disc.zero_grad()
            real_score = mean(disc(real))
            fake_score = mean(disc(fake))
            penalty = gradient_penalty(disc, real, fake, cfg.gp_weight, rng)
            d_loss = fake_score - real_score + penalty
            if not np.isfinite(d_loss.item()):
                raise NonFiniteLossError(f"epoch {epoch} iteration {iteration}: critic loss is {d_loss.item()}")
            backward(d_loss)
            disc_params = disc.parameters()
            adam_step(disc_params, [param.grad for param in disc_params], optimizers.critic)

            sums["wasserstein"] += real_score.item() - fake_score.item()
            sums["gp"] += penalty.item()
            sums["d_loss"] += d_loss.item()
            d_steps += 1

        disc.zero_grad()
        for param in generator_params:
            param.zero_grad()
        fake = _fake_clouds(mapper, decoder, sample_prior(stream.batch_size, latent_dim, rng), cfg)
        g_loss = -mean(disc(fake))
        if not np.isfinite(g_loss.item()):
            raise NonFiniteLossError(f"epoch {epoch} iteration {iteration}: generator loss is {g_loss.item()}")
        backward(g_loss)
        if not cfg.decoder_trainable:
            _check_frozen(decoder)
        adam_step(generator_params, [param.grad for param in generator_params], optimizers.generator)
        disc.zero_grad()
        sums["g_loss"] += g_loss.item()
        g_steps += 1

    stats = GanEpochStats(
        epoch=epoch,
        wasserstein=sums["wasserstein"] / d_steps,
        gp=sums["gp"] / d_steps,
        d_loss=sums["d_loss"] / d_steps,
        g_loss=sums["g_loss"] / g_steps,
        d_steps=d_steps,
        g_steps=g_steps,
        seconds=time.perf_counter() - start,
    )
    logger.info(
        f"gan epoch {epoch}: W {stats.wasserstein:.6f} gp {stats.gp:.6f} d {stats.d_loss:.6f} g {stats.g_loss:.6f} ({stats.seconds:.1f}s)"
    )
    return stats
