"""Style-aware decoder pieces: adaptive instance normalization, squeeze-and-excitation
gating and the block combining them."""

# Standard library imports
from typing import Optional

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Parameter, Tensor, channel_stats, leaky_relu, pool_points, sigmoid_act
from pycloudgen.autodiff.ops import reciprocal, reshape
from pycloudgen.networks.layers.layer import Layer
from pycloudgen.networks.layers.linear import BatchNorm, Dense, PointwiseConv
from pycloudgen.utils.constants import leaky_slope, se_reduction
from pycloudgen.utils.exceptions import ShapeMismatchError


def adain(x: Tensor, y_s: Tensor, y_b: Tensor) -> Tensor:
    """Adaptive instance normalization.

    Every channel of every instance is normalized over the point axis and then scaled by
    y_s and shifted by y_b: y_s * (x - mu(x)) / sigma(x) + y_b.

    Args:
        x (Tensor): features [B, C, N].
        y_s (Tensor): style scales [B, C].
        y_b (Tensor): style biases [B, C].

    Returns:
        styled (Tensor): [B, C, N].

    Raises:
        ShapeMismatchError: if the channel counts disagree.

    """
    if x.ndim != 3 or y_s.shape != x.shape[:2] or y_b.shape != x.shape[:2]:
        raise ShapeMismatchError(f"adain expects x [B,C,N] with y_s, y_b [B,C]; got {x.shape}, {y_s.shape}, {y_b.shape}")

    batch, channels, _ = x.shape
    mu, sigma = channel_stats(x)
    per_channel = (batch, channels, 1)
    normalized = (x - reshape(mu, per_channel)) * reshape(reciprocal(sigma), per_channel)
    return normalized * reshape(y_s, per_channel) + reshape(y_b, per_channel)


class SELayer(Layer):
    """Squeeze-and-excitation: channels are gated by sigmoid(fc2(leaky(fc1(maxpool(x)))))."""

    def __init__(self, name: str, channels: int, rng: np.random.Generator, reduction: int = se_reduction):
        super().__init__(name)
        if channels % reduction != 0:
            raise ValueError(f"SE channels ({channels}) must be divisible by the reduction ratio ({reduction})")
        self.fc1 = Dense(f"{name}.fc1", channels, channels // reduction, rng)
        self.fc2 = Dense(f"{name}.fc2", channels // reduction, channels, rng)

    def children(self) -> list[Layer]:
        return [self.fc1, self.fc2]

    def gates(self, x: Tensor) -> Tensor:
        squeezed = pool_points(x, "max")
        return sigmoid_act(self.fc2(leaky_relu(self.fc1(squeezed), leaky_slope)))

    def __call__(self, x: Tensor) -> Tensor:
        gates = self.gates(x)
        return x * reshape(gates, gates.shape + (1,))


class StyleBlock(Layer):
    """One decoder block: style affine, AdaIN, pointwise conv, BN, optional SE, LeakyReLU.

    The style affine maps the latent code to (y_s, y_b) for the block's input channels. It
    is held as two dense maps whose biases start at y_s = 1 and y_b = 0.
    """

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        latent_dim: int,
        rng: np.random.Generator,
        use_se: bool = True,
        reduction: int = se_reduction,
    ):
        super().__init__(name)
        self.in_channels = in_channels
        self.style_scale = Dense(f"{name}.style_scale", latent_dim, in_channels, rng)
        self.style_scale.bias = Parameter(f"{name}.style_scale.bias", np.ones(in_channels))
        self.style_bias = Dense(f"{name}.style_bias", latent_dim, in_channels, rng)
        self.style_bias.bias = Parameter(f"{name}.style_bias.bias", np.zeros(in_channels))
        self.conv = PointwiseConv(f"{name}.conv", in_channels, out_channels, rng)
        self.bn = BatchNorm(f"{name}.bn", out_channels)
        self.se: Optional[SELayer] = SELayer(f"{name}.se", out_channels, rng, reduction) if use_se else None

    def children(self) -> list[Layer]:
        layers: list[Layer] = [self.style_scale, self.style_bias, self.conv, self.bn]
        if self.se is not None:
            layers.append(self.se)
        return layers

    def style_code(self, z: Tensor) -> tuple[Tensor, Tensor]:
        """(y_s, y_b), each [B, in_channels]."""
        return self.style_scale(z), self.style_bias(z)

    def __call__(self, x: Tensor, z: Optional[Tensor] = None) -> Tensor:
        if z is None:
            raise ValueError("a style block needs a latent code")
        y_s, y_b = self.style_code(z)
        h = self.bn(self.conv(adain(x, y_s, y_b)))
        if self.se is not None:
            h = self.se(h)
        return leaky_relu(h, leaky_slope)
