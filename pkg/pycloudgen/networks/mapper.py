# Standard library imports
from typing import Any, Optional

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Tensor, leaky_relu
from pycloudgen.networks.layers.layer import Layer
from pycloudgen.networks.layers.linear import BatchNorm, Dense
from pycloudgen.networks.network import Network, NetworkConfig
from pycloudgen.utils.constants import leaky_slope
from pycloudgen.utils.exceptions import ShapeMismatchError


class Mapper(Network):
    """Mapping network from prior samples w to latent codes z': a stack of
    (dense, BN, LeakyReLU) layers."""

    def __init__(self, config: NetworkConfig, rng: Optional[np.random.Generator] = None, name: str = "mapper"):
        super().__init__(name)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config

        widths = [config.latent_dim] + [config.mapper_width] * (config.mapper_layers - 1) + [config.latent_dim]
        self.denses = [Dense(f"{name}.fc{i}", widths[i], widths[i + 1], rng) for i in range(config.mapper_layers)]
        self.bns = [BatchNorm(f"{name}.bn{i}", widths[i + 1]) for i in range(config.mapper_layers)]

    def layers(self) -> list[Layer]:
        return [*self.denses, *self.bns]

    def forward(self, w: Any) -> Tensor:
        h = w if isinstance(w, Tensor) else Tensor(np.atleast_2d(np.asarray(w, dtype=np.float64)))
        if h.ndim != 2 or h.shape[1] != self.config.latent_dim:
            raise ShapeMismatchError(f"mapper expects prior samples [B, {self.config.latent_dim}], got {h.shape}")
        for dense, bn in zip(self.denses, self.bns):
            h = leaky_relu(bn(dense(h)), leaky_slope)
        return h
