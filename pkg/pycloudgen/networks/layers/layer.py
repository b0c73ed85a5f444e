# Standard library imports
from abc import ABC, abstractmethod

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Parameter, Tensor

MODES = ["train", "eval"]


class Layer(ABC):
    """A named building block owning parameters and, optionally, non-trainable buffers.

    Parameter and buffer names are prefixed with the layer name, e.g. `encoder.conv0.weight`.
    """

    def __init__(self, name: str):
        # Argument checking
        if not isinstance(name, str):
            raise TypeError(f"arg 'name' must be of type str, not {type(name)}")

        self.name = name
        self.__mode = "train"

    @property
    def mode(self) -> str:
        return self.__mode

    def set_mode(self, mode: str) -> None:
        if mode not in MODES:
            raise ValueError(f"'mode' must be one of {MODES} (gave {mode})")
        self.__mode = mode
        for child in self.children():
            child.set_mode(mode)

    def children(self) -> list["Layer"]:
        return []

    def parameters(self) -> list[Parameter]:
        return [parameter for child in self.children() for parameter in child.parameters()]

    def buffers(self) -> dict[str, np.ndarray]:
        return {name: value for child in self.children() for name, value in child.buffers().items()}

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        for child in self.children():
            if name in child.buffers():
                child.set_buffer(name, value)
                return
        raise KeyError(f"layer '{self.name}' has no buffer '{name}'")

    @abstractmethod
    def __call__(self, x: Tensor) -> Tensor:
        pass


def kaiming_uniform(rng: np.random.Generator, fan_in: int, shape: tuple[int, ...], slope: float) -> np.ndarray:
    """Uniform weights with variance 2 / ((1 + slope^2) fan_in)."""
    bound = np.sqrt(6.0 / ((1.0 + slope**2) * fan_in))
    return rng.uniform(-bound, bound, size=shape)


def bias_uniform(rng: np.random.Generator, fan_in: int, size: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=size)
