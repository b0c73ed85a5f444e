"""Style-aware point-cloud decoder and its MLP baseline."""

# Standard library imports
import logging
from typing import Any, Optional

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Tensor, leaky_relu, tanh_act
from pycloudgen.autodiff.ops import broadcast_to, concat, reshape
from pycloudgen.networks.layers.layer import Layer
from pycloudgen.networks.layers.linear import BatchNorm, PointwiseConv
from pycloudgen.networks.layers.style import StyleBlock
from pycloudgen.networks.network import Network, NetworkConfig
from pycloudgen.utils.constants import leaky_slope
from pycloudgen.utils.exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)


def constant_input_points(num_points: int, surface: bool, rng: np.random.Generator) -> np.ndarray:
    """Fixed starting points: uniform in [-1, 1]^3, or uniform on the square z = 0."""
    points = rng.uniform(-1.0, 1.0, size=(num_points, 3))
    if surface:
        points[:, 2] = 0.0
    points.setflags(write=False)
    return points


class Decoder(Network):
    """Maps latent codes [B, latent_dim] to clouds [B, num_points, 3] inside (-1, 1)^3.

    The style decoder starts from a constant point set and applies one StyleBlock per
    configured width, then a pointwise head to 3 channels followed by tanh. With
    `mlp_decoder` the latent code is instead appended to every constant point and a plain
    per-point MLP (conv, BN, LeakyReLU) produces the coordinates.
    """

    def __init__(self, config: NetworkConfig, rng: Optional[np.random.Generator] = None, name: str = "decoder"):
        super().__init__(name)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config
        self.__constant_input = constant_input_points(config.num_points, config.surface_input, rng)

        widths = tuple(config.decoder_widths)
        self.blocks: list[StyleBlock] = []
        self.convs: list[PointwiseConv] = []
        self.bns: list[BatchNorm] = []
        if config.mlp_decoder:
            ladder = (3 + config.latent_dim,) + widths
            self.convs = [PointwiseConv(f"{name}.mlp{i}", ladder[i], ladder[i + 1], rng) for i in range(len(widths))]
            self.bns = [BatchNorm(f"{name}.mlp_bn{i}", ladder[i + 1]) for i in range(len(widths))]
        else:
            ladder = (3,) + widths
            self.blocks = [
                StyleBlock(
                    f"{name}.block{i}",
                    ladder[i],
                    ladder[i + 1],
                    config.latent_dim,
                    rng,
                    use_se=not config.se_off,
                    reduction=config.se_reduction,
                )
                for i in range(len(widths))
            ]
        self.head = PointwiseConv(f"{name}.head", widths[-1], 3, rng)

    @property
    def constant_input(self) -> np.ndarray:
        return self.__constant_input

    def layers(self) -> list[Layer]:
        return [*self.blocks, *self.convs, *self.bns, self.head]

    def buffers(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.constant_input": self.__constant_input, **super().buffers()}

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        if name == f"{self.name}.constant_input":
            points = np.array(value, dtype=np.float64)
            points.setflags(write=False)
            self.__constant_input = points
            return
        super().set_buffer(name, value)

    def forward(self, z: Any) -> Tensor:
        z = z if isinstance(z, Tensor) else Tensor(np.atleast_2d(np.asarray(z, dtype=np.float64)))
        if z.ndim != 2 or z.shape[1] != self.config.latent_dim:
            raise ShapeMismatchError(f"decoder expects latent codes [B, {self.config.latent_dim}], got {z.shape}")
        batch = z.shape[0]
        start = Tensor(np.broadcast_to(self.__constant_input.T, (batch, 3, self.config.num_points)))

        if self.config.mlp_decoder:
            codes = broadcast_to(reshape(z, (batch, self.config.latent_dim, 1)), (batch, self.config.latent_dim, self.config.num_points))
            h = concat([start, codes], axis=1)
            for conv, bn in zip(self.convs, self.bns):
                h = leaky_relu(bn(conv(h)), leaky_slope)
        else:
            h = start
            for block in self.blocks:
                h = block(h, z)

        return tanh_act(self.head(h)).transpose(0, 2, 1)
