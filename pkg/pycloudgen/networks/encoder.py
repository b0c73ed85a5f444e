# Standard library imports
from typing import Any, Optional

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Tensor, leaky_relu, pool_points
from pycloudgen.autodiff.ops import concat
from pycloudgen.networks.layers.layer import Layer
from pycloudgen.networks.layers.linear import BatchNorm, Dense, PointwiseConv
from pycloudgen.networks.network import Network, NetworkConfig
from pycloudgen.utils.constants import leaky_slope


class Encoder(Network):
    """PointNet encoder: per-point MLP with BN and LeakyReLU, max- and average-pooled
    features concatenated, and a dense layer to the latent code."""

    def __init__(self, config: NetworkConfig, rng: Optional[np.random.Generator] = None, name: str = "encoder"):
        super().__init__(name)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config

        widths = (3,) + tuple(config.encoder_widths)
        self.convs = [PointwiseConv(f"{name}.conv{i}", widths[i], widths[i + 1], rng) for i in range(len(widths) - 1)]
        self.bns = [BatchNorm(f"{name}.bn{i}", widths[i + 1]) for i in range(len(widths) - 1)]
        self.head = Dense(f"{name}.head", 2 * widths[-1], config.latent_dim, rng)

    def layers(self) -> list[Layer]:
        return [*self.convs, *self.bns, self.head]

    def features(self, points: Any) -> Tensor:
        """Pooled [B, 2C] descriptor before the final dense layer."""
        h = self.as_points(points).transpose(0, 2, 1)
        for conv, bn in zip(self.convs, self.bns):
            h = leaky_relu(bn(conv(h)), leaky_slope)
        return concat([pool_points(h, "max"), pool_points(h, "avg")], axis=1)

    def forward(self, points: Any) -> Tensor:
        """Encodes clouds [B, N, 3] (or one [N, 3] cloud) to latent codes [B, latent_dim]."""
        return self.head(self.features(points))
