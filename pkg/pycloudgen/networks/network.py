"""Base class of the four networks and their shared architecture configuration."""

# Standard library imports
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, fields
from typing import Any

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Parameter, Tensor
from pycloudgen.networks.layers.layer import MODES, Layer
from pycloudgen.utils.config import RunConfig
from pycloudgen.utils.constants import latent_dim, full_num_points, se_reduction
from pycloudgen.utils.exceptions import CheckpointError, ConfigError, ShapeMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture of all four networks.

    Attributes:
        num_points (int): points emitted by the decoder.
        latent_dim (int): size of z and w.
        encoder_widths (tuple[int, ...]): per-point MLP widths of the encoder.
        decoder_widths (tuple[int, ...]): output channels of the decoder blocks.
        disc_widths (tuple[int, ...]): per-point MLP widths of the discriminator.
        disc_hidden (int): width of the discriminator's hidden dense layer.
        disc_batch_norm (bool): insert BN into the discriminator trunk. The gradient
            penalty cannot differentiate through it.
        mapper_layers (int): dense layers of the mapping network.
        mapper_width (int): hidden width of the mapping network.
        se_reduction (int): squeeze-and-excitation reduction ratio.
        mlp_decoder (bool): replace the style decoder by a per-point MLP on [coords, z].
        se_off (bool): style decoder without SE layers.
        surface_input (bool): constant input sampled on a flat square instead of the cube.
    """

    num_points: int = full_num_points
    latent_dim: int = latent_dim
    encoder_widths: tuple[int, ...] = (64, 128, 256, 512)
    decoder_widths: tuple[int, ...] = (64, 128, 256, 512)
    disc_widths: tuple[int, ...] = (64, 128, 256, 512)
    disc_hidden: int = 256
    disc_batch_norm: bool = False
    mapper_layers: int = 4
    mapper_width: int = latent_dim
    se_reduction: int = se_reduction
    mlp_decoder: bool = False
    se_off: bool = False
    surface_input: bool = False

    def __post_init__(self) -> None:
        if self.mlp_decoder and (self.se_off or self.surface_input):
            raise ConfigError("mlp_decoder cannot be combined with se_off or surface_input")
        for name in ["encoder_widths", "decoder_widths", "disc_widths"]:
            widths = getattr(self, name)
            if not widths or any(width < 1 for width in widths):
                raise ConfigError(f"'{name}' must be a non-empty list of positive widths (gave {widths})")
        if self.num_points < 1 or self.latent_dim < 1 or self.mapper_layers < 1:
            raise ConfigError("num_points, latent_dim and mapper_layers must be positive")
        if not (self.mlp_decoder or self.se_off) and any(width % self.se_reduction for width in self.decoder_widths):
            raise ConfigError(f"decoder widths {self.decoder_widths} must be divisible by se_reduction {self.se_reduction}")

    @classmethod
    def from_run_config(cls, config: RunConfig) -> "NetworkConfig":
        return cls(
            num_points=config.get_int("num_points"),
            latent_dim=config.get_int("latent_dim"),
            encoder_widths=tuple(config.get_ints("encoder_widths")),
            decoder_widths=tuple(config.get_ints("decoder_widths")),
            disc_widths=tuple(config.get_ints("disc_widths")),
            disc_hidden=config.get_int("disc_hidden"),
            disc_batch_norm=config.get_bool("disc_batch_norm"),
            mapper_layers=config.get_int("mapper_layers"),
            mapper_width=config.get_int("mapper_width"),
            se_reduction=config.get_int("se_reduction"),
            mlp_decoder=config.get_bool("mlp_decoder"),
            se_off=config.get_bool("se_off"),
            surface_input=config.get_bool("surface_input"),
        )

    def as_dict(self) -> dict[str, Any]:
        return {field.name: getattr(self, field.name) for field in fields(self)}


class Network(ABC):
    """A named stack of layers with a train/eval mode.

    Subclasses list their layers in `layers()` and implement `forward`. Parameters and
    buffers are addressed by their full dotted names.
    """

    def __init__(self, name: str):
        # Argument checking
        if not isinstance(name, str):
            raise TypeError(f"arg 'name' must be of type str, not {type(name)}")

        self.name = name
        self.__mode = "train"
        self.__frozen = False

    @abstractmethod
    def layers(self) -> list[Layer]:
        pass

    @abstractmethod
    def forward(self, x: Any) -> Tensor:
        pass

    def __call__(self, x: Any) -> Tensor:
        return self.forward(x)

    @property
    def mode(self) -> str:
        return self.__mode

    @property
    def frozen(self) -> bool:
        return self.__frozen

    def set_mode(self, mode: str) -> "Network":
        if mode not in MODES:
            raise ValueError(f"'mode' must be one of {MODES} (gave {mode})")
        self.__mode = mode
        for layer in self.layers():
            layer.set_mode(mode)
        return self

    def train(self) -> "Network":
        return self.set_mode("train")

    def eval(self) -> "Network":
        return self.set_mode("eval")

    def parameters(self) -> list[Parameter]:
        return [parameter for layer in self.layers() for parameter in layer.parameters()]

    def named_parameters(self) -> dict[str, Parameter]:
        named: dict[str, Parameter] = {}
        for parameter in self.parameters():
            if parameter.name in named:
                raise ValueError(f"duplicate parameter name '{parameter.name}' in network '{self.name}'")
            named[parameter.name] = parameter
        return named

    def buffers(self) -> dict[str, np.ndarray]:
        return {name: value for layer in self.layers() for name, value in layer.buffers().items()}

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        for layer in self.layers():
            if name in layer.buffers():
                layer.set_buffer(name, value)
                return
        raise KeyError(f"network '{self.name}' has no buffer '{name}'")

    def state_dict(self) -> dict[str, np.ndarray]:
        """Copies of every parameter and buffer, keyed by name."""
        state = {name: parameter.data.copy() for name, parameter in self.named_parameters().items()}
        state.update({name: np.array(value, copy=True) for name, value in self.buffers().items()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray], strict: bool = True) -> None:
        """Replaces parameter and buffer values by name.

        Args:
            state (dict[str, np.ndarray]): values keyed by full name; entries of other
                networks are ignored.
            strict (bool): require a value for every parameter and buffer. Defaults to True.

        Raises:
            CheckpointError: on a missing entry (strict) or a shape mismatch.

        """
        parameters = self.named_parameters()
        buffers = self.buffers()
        for name in list(parameters) + list(buffers):
            if name not in state:
                if strict:
                    raise CheckpointError(f"missing tensor '{name}' for network '{self.name}'")
                continue
            value = np.asarray(state[name], dtype=np.float64)
            expected = parameters[name].shape if name in parameters else np.shape(buffers[name])
            if value.shape != tuple(expected):
                raise CheckpointError(f"tensor '{name}' has shape {value.shape}, the network expects {tuple(expected)}")
            if name in parameters:
                parameters[name].data = value.copy()
            else:
                self.set_buffer(name, value.copy())

    def zero_grad(self) -> None:
        for parameter in self.parameters():
            parameter.zero_grad()

    def freeze(self) -> "Network":
        """Stops gradient tracking for every parameter."""
        for parameter in self.parameters():
            parameter.requires_grad = False
            parameter.zero_grad()
        self.__frozen = True
        return self

    def unfreeze(self) -> "Network":
        for parameter in self.parameters():
            parameter.requires_grad = True
        self.__frozen = False
        return self

    def parameter_count(self) -> int:
        """Number of trainable scalar parameters."""
        return int(sum(parameter.size for parameter in self.parameters() if parameter.requires_grad))

    @staticmethod
    def as_points(points: Any) -> Tensor:
        """Accepts [N, 3] or [B, N, 3] arrays or tensors and returns a [B, N, 3] tensor."""
        if not isinstance(points, Tensor):
            points = np.asarray(points, dtype=np.float64)
            if points.ndim == 2:
                points = points[None]
            points = Tensor(points)
        elif points.ndim == 2:
            points = points.reshape(1, *points.shape)
        if points.ndim != 3 or points.shape[2] != 3:
            raise ShapeMismatchError(f"expected points of shape [B, N, 3], got {points.shape}")
        return points

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name='{self.name}', mode='{self.mode}', parameters={self.parameter_count()})"
