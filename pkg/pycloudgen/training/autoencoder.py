"""Stage one: auto-encoder training and reconstruction evaluation."""

# Standard library imports
import logging
import time
from dataclasses import asdict, dataclass
from typing import Optional

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Tensor, backward, no_grad
from pycloudgen.autodiff.ops import mul, sum as tensor_sum
from pycloudgen.data.dataset import CloudDataset
from pycloudgen.data.normalization import denormalize
from pycloudgen.networks.network import Network
from pycloudgen.training.configs import StageOneConfig
from pycloudgen.training.optimizers import AdamState, adam_step, lr_schedule
from pycloudgen.utils.constants import cd_report_scale, emd_report_scale
from pycloudgen.utils.distances import AuctionConfig, chamfer, emd_auction, recon_loss_terms
from pycloudgen.utils.exceptions import NonFiniteLossError, ShapeMismatchError

logger = logging.getLogger(__name__)


@dataclass
class EpochStats:
    """Summary of one auto-encoder epoch; distances are means over clouds in normalized space."""

    epoch: int
    loss: float
    cd: float
    emd: float
    lr: float
    seconds: float

    def as_row(self) -> dict[str, float]:
        return asdict(self)


@dataclass
class ReconstructionReport:
    """Mean reconstruction distances in de-normalized coordinates.

    `cd` and `emd` are raw; the reported values are cd x1e4 and emd x1e2.
    """

    cd: float
    emd: float
    count: int

    @property
    def cd_reported(self) -> float:
        return self.cd * cd_report_scale

    @property
    def emd_reported(self) -> float:
        return self.emd * emd_report_scale


def ae_adam_state(cfg: StageOneConfig) -> AdamState:
    return AdamState(lr=cfg.lr, betas=cfg.betas)


def train_ae_epoch(
    encoder: Network,
    decoder: Network,
    dataset: CloudDataset,
    cfg: StageOneConfig,
    state: AdamState,
    epoch: int,
    rng: np.random.Generator,
) -> EpochStats:
    """Runs one epoch of auto-encoder training.

    For each shuffled batch the clouds are encoded and decoded, the reconstruction loss
    and its gradient with respect to the decoded points are computed cloud by cloud, and
    that gradient is pushed back through decoder and encoder before an Adam step on both.

    Args:
        encoder (Network): point-cloud encoder.
        decoder (Network): decoder producing as many points as the dataset clouds hold.
        dataset (CloudDataset): normalized training clouds, at least two.
        cfg (StageOneConfig): training settings.
        state (AdamState): optimizer state shared by both networks.
        epoch (int): zero-based epoch index, drives the learning-rate schedule.
        rng (np.random.Generator): batch shuffling.

    Returns:
        stats (EpochStats)

    Raises:
        NonFiniteLossError: if a batch loss is NaN or Inf.

    """
    # Argument checking
    if len(dataset) < 2:
        raise ValueError(f"training needs at least two clouds (gave {len(dataset)})")

    start = time.perf_counter()
    encoder.train()
    decoder.train()
    state.lr = lr_schedule(epoch, cfg)
    params = encoder.parameters() + decoder.parameters()

    totals = {"loss": 0.0, "cd": 0.0, "emd": 0.0}
    for batch_index, indices in enumerate(dataset.batches(cfg.batch, rng)):
        targets = dataset.clouds[indices]
        encoder.zero_grad()
        decoder.zero_grad()

        reconstructed = decoder(encoder(targets))
        if reconstructed.shape != targets.shape:
            raise ShapeMismatchError(f"decoder output {reconstructed.shape} does not match the targets {targets.shape}")

        batch = len(indices)
        grad = np.zeros_like(reconstructed.data)
        batch_loss = 0.0
        for b in range(batch):
            terms = recon_loss_terms(reconstructed.data[b], targets[b], cfg.loss_variant, cfg.auction)
            grad[b] = terms.grad / batch
            batch_loss += terms.value
            totals["cd"] += terms.cd
            totals["emd"] += terms.emd
        if not np.isfinite(batch_loss):
            raise NonFiniteLossError(f"epoch {epoch} batch {batch_index}: reconstruction loss is {batch_loss}")
        totals["loss"] += batch_loss
        logger.debug(f"epoch {epoch} batch {batch_index}: loss {batch_loss / batch:.6f}")

        # d surrogate / d reconstructed equals the loss gradient
        surrogate = tensor_sum(mul(reconstructed, Tensor(grad)))
        if surrogate.requires_grad:
            backward(surrogate)
        adam_step(params, [param.grad for param in params], state)

    count = len(dataset)
    stats = EpochStats(
        epoch=epoch,
        loss=totals["loss"] / count,
        cd=totals["cd"] / count,
        emd=totals["emd"] / count,
        lr=state.lr,
        seconds=time.perf_counter() - start,
    )
    logger.info(f"ae epoch {epoch}: loss {stats.loss:.6f} cd {stats.cd:.6f} emd {stats.emd:.6f} lr {stats.lr:g} ({stats.seconds:.1f}s)")
    return stats


def reconstruct(encoder: Network, decoder: Network, clouds: np.ndarray) -> np.ndarray:
    """Eval-mode reconstruction of normalized clouds [B, N, 3]."""
    with no_grad():
        encoder.eval()
        decoder.eval()
        return decoder(encoder(clouds)).data.copy()


def evaluate_reconstruction(
    encoder: Network, decoder: Network, dataset: CloudDataset, auction: Optional[AuctionConfig] = None
) -> ReconstructionReport:
    """Mean CD and EMD between every cloud and its reconstruction, both de-normalized
    with the cloud's own record."""
    cd_total = 0.0
    emd_total = 0.0
    for index in range(len(dataset)):
        record = dataset.records[index]
        output = reconstruct(encoder, decoder, dataset.clouds[index : index + 1])[0]
        original = denormalize(dataset.clouds[index], record)
        restored = denormalize(output, record)
        cd_total += chamfer(restored, original)
        emd_total += emd_auction(restored, original, auction)[0]
    report = ReconstructionReport(cd=cd_total / len(dataset), emd=emd_total / len(dataset), count=len(dataset))
    logger.info(f"reconstruction over {report.count} clouds: CD x1e4 {report.cd_reported:.4f}, EMD x1e2 {report.emd_reported:.4f}")
    return report


def reconstruction_oracle(dataset: CloudDataset, seed: int, auction: Optional[AuctionConfig] = None) -> ReconstructionReport:
    """Lower bound for reconstruction scores: distances between each cloud and an
    independent resampling of itself (drawn with replacement from its own points)."""
    rng = np.random.default_rng(seed)
    cd_total = 0.0
    emd_total = 0.0
    for index in range(len(dataset)):
        original = denormalize(dataset.clouds[index], dataset.records[index])
        resampled = original[rng.choice(len(original), size=len(original), replace=True)]
        cd_total += chamfer(resampled, original)
        emd_total += emd_auction(resampled, original, auction)[0]
    return ReconstructionReport(cd=cd_total / len(dataset), emd=emd_total / len(dataset), count=len(dataset))
