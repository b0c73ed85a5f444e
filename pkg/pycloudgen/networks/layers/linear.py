"""Dense and pointwise-convolution layers and per-channel batch normalization."""

# Standard library imports

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Parameter, RunningStats, Tensor, affine, batch_norm, pointwise_conv
from pycloudgen.networks.layers.layer import Layer, bias_uniform, kaiming_uniform
from pycloudgen.utils.constants import leaky_slope


class Dense(Layer):
    """Fully-connected layer y = xW + b on [B, I] input."""

    def __init__(self, name: str, in_features: int, out_features: int, rng: np.random.Generator, slope: float = leaky_slope):
        super().__init__(name)
        self.weight = Parameter(f"{name}.weight", kaiming_uniform(rng, in_features, (in_features, out_features), slope))
        self.bias = Parameter(f"{name}.bias", bias_uniform(rng, in_features, out_features))

    @property
    def in_features(self) -> int:
        return self.weight.shape[0]

    @property
    def out_features(self) -> int:
        return self.weight.shape[1]

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]

    def __call__(self, x: Tensor) -> Tensor:
        return affine(x, self.weight, self.bias)


class PointwiseConv(Layer):
    """Kernel-size-1 convolution on [B, C, N] input, shared by every point."""

    def __init__(self, name: str, in_channels: int, out_channels: int, rng: np.random.Generator, slope: float = leaky_slope):
        super().__init__(name)
        self.weight = Parameter(f"{name}.weight", kaiming_uniform(rng, in_channels, (in_channels, out_channels), slope))
        self.bias = Parameter(f"{name}.bias", bias_uniform(rng, in_channels, out_channels))

    @property
    def out_channels(self) -> int:
        return self.weight.shape[1]

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]

    def __call__(self, x: Tensor) -> Tensor:
        return pointwise_conv(x, self.weight, self.bias)


class BatchNorm(Layer):
    """Batch normalization over [B, C] or [B, C, N] input with running statistics.

    The running mean and variance are buffers named `<name>.running_mean` and
    `<name>.running_var`.
    """

    def __init__(self, name: str, channels: int):
        super().__init__(name)
        self.gamma = Parameter(f"{name}.gamma", np.ones(channels))
        self.beta = Parameter(f"{name}.beta", np.zeros(channels))
        self.stats = RunningStats.initial(channels)

    def parameters(self) -> list[Parameter]:
        return [self.gamma, self.beta]

    def buffers(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.running_mean": self.stats.mean, f"{self.name}.running_var": self.stats.var}

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        match name.removeprefix(f"{self.name}."):
            case "running_mean":
                self.stats.mean = np.array(value, dtype=np.float64)
            case "running_var":
                self.stats.var = np.array(value, dtype=np.float64)
            case _:
                raise KeyError(f"layer '{self.name}' has no buffer '{name}'")

    def __call__(self, x: Tensor) -> Tensor:
        return batch_norm(x, self.gamma, self.beta, self.stats, self.mode)
