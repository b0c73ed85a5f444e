# Standard library imports
from typing import Any, Optional

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Tensor, leaky_relu, pool_points
from pycloudgen.networks.layers.layer import Layer
from pycloudgen.networks.layers.linear import BatchNorm, Dense, PointwiseConv
from pycloudgen.networks.network import Network, NetworkConfig
from pycloudgen.utils.constants import leaky_slope


class Discriminator(Network):
    """PointNet critic: per-point MLP with LeakyReLU, max pooling, then dense layers to one
    unbounded score per cloud.

    The trunk has no batch normalization unless `disc_batch_norm` is set, so that the
    gradient penalty can differentiate the critic's input gradient.
    """

    def __init__(self, config: NetworkConfig, rng: Optional[np.random.Generator] = None, name: str = "disc"):
        super().__init__(name)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config

        widths = (3,) + tuple(config.disc_widths)
        self.convs = [PointwiseConv(f"{name}.conv{i}", widths[i], widths[i + 1], rng) for i in range(len(widths) - 1)]
        self.bns = [BatchNorm(f"{name}.bn{i}", widths[i + 1]) for i in range(len(widths) - 1)] if config.disc_batch_norm else []
        self.hidden = Dense(f"{name}.fc0", widths[-1], config.disc_hidden, rng)
        self.out = Dense(f"{name}.fc1", config.disc_hidden, 1, rng)

    def layers(self) -> list[Layer]:
        return [*self.convs, *self.bns, self.hidden, self.out]

    def forward(self, points: Any) -> Tensor:
        """Scores clouds [B, N, 3]; returns [B]."""
        h = self.as_points(points).transpose(0, 2, 1)
        for i, conv in enumerate(self.convs):
            h = conv(h)
            if self.bns:
                h = self.bns[i](h)
            h = leaky_relu(h, leaky_slope)
        score = self.out(leaky_relu(self.hidden(pool_points(h, "max")), leaky_slope))
        return score.reshape(score.shape[0])
