"""Dense float64 tensors that record the operations producing them."""

# Standard library imports
import os
import re
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Optional, Sequence, Union

# Third party imports
import numpy as np

# Local imports

if TYPE_CHECKING:
    from pycloudgen.autodiff.function import Function

PARAMETER_NAME_PATTERN = re.compile(r"^[a-z0-9_.]+$")

ArrayLike = Union[np.ndarray, Sequence, float, int]

_state = threading.local()
_debug_checks = os.environ.get("PYCLOUDGEN_DEBUG", "0") == "1"


def is_grad_enabled() -> bool:
    """Whether ops executed on this thread record graph nodes."""
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Context manager that disables graph recording on the current thread."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


@contextmanager
def enable_grad() -> Iterator[None]:
    """Context manager that re-enables graph recording on the current thread."""
    previous = is_grad_enabled()
    _state.grad_enabled = True
    try:
        yield
    finally:
        _state.grad_enabled = previous


def set_debug_checks(enabled: bool) -> None:
    """Turns the per-op NaN/Inf verification on or off for the whole process."""
    global _debug_checks
    if not isinstance(enabled, bool):
        raise TypeError(f"arg 'enabled' must be of type bool, not {type(enabled)}")
    _debug_checks = enabled


def debug_checks_enabled() -> bool:
    return _debug_checks


@dataclass
class GraphNode:
    """Records how a tensor was produced: the op instance (carrying its saved
    intermediates and tag) and the tensors it consumed."""

    function: "Function"
    inputs: tuple["Tensor", ...]

    @property
    def op_tag(self) -> str:
        return self.function.tag


class Tensor:
    """A dense n-dimensional float64 value, optionally tracked for differentiation.

    Attributes:
        data (np.ndarray): the values, row-major float64.
        requires_grad (bool): whether gradients flow to (or through) this tensor.
        grad (Optional[np.ndarray]): accumulated gradient for leaves, same shape as data.
        node (Optional[GraphNode]): the op that produced this tensor, None for leaves.
    """

    def __init__(self, data: ArrayLike, requires_grad: bool = False) -> None:
        # Argument checking
        if not isinstance(requires_grad, bool):
            raise TypeError(f"arg 'requires_grad' must be of type bool, not {type(requires_grad)}")

        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.node: Optional[GraphNode] = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self.node is None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        from pycloudgen.autodiff.graph import backward

        backward(self)

    # Arithmetic

    def __add__(self, other: Union["Tensor", float]) -> "Tensor":
        from pycloudgen.autodiff import ops

        return ops.add(self, other)

    def __radd__(self, other: Union["Tensor", float]) -> "Tensor":
        from pycloudgen.autodiff import ops

        return ops.add(other, self)

    def __sub__(self, other: Union["Tensor", float]) -> "Tensor":
        from pycloudgen.autodiff import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Union["Tensor", float]) -> "Tensor":
        from pycloudgen.autodiff import ops

        return ops.sub(other, self)

    def __mul__(self, other: Union["Tensor", float]) -> "Tensor":
        from pycloudgen.autodiff import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Union["Tensor", float]) -> "Tensor":
        from pycloudgen.autodiff import ops

        return ops.mul(other, self)

    def __neg__(self) -> "Tensor":
        from pycloudgen.autodiff import ops

        return ops.scale(self, -1.0)

    def __truediv__(self, other: float) -> "Tensor":
        from pycloudgen.autodiff import ops

        if not isinstance(other, (int, float)):
            raise TypeError(f"only division by a python scalar is supported, not {type(other)}")
        return ops.scale(self, 1.0 / float(other))

    def sum(self, axis: Optional[Union[int, tuple[int, ...]]] = None) -> "Tensor":
        from pycloudgen.autodiff import ops

        return ops.sum(self, axis)

    def mean(self, axis: Optional[Union[int, tuple[int, ...]]] = None) -> "Tensor":
        from pycloudgen.autodiff import ops

        return ops.mean(self, axis)

    def reshape(self, *shape: int) -> "Tensor":
        from pycloudgen.autodiff import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        from pycloudgen.autodiff import ops

        return ops.transpose(self, axes if axes else None)

    def __repr__(self) -> str:
        tag = f", op={self.node.op_tag}" if self.node is not None else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"


class Parameter(Tensor):
    """A named trainable leaf tensor.

    Names follow `[a-z0-9_.]+` and are the keys used when saving and loading models.
    """

    def __init__(self, name: str, data: ArrayLike) -> None:
        # Argument checking
        if not isinstance(name, str):
            raise TypeError(f"arg 'name' must be of type str, not {type(name)}")
        if PARAMETER_NAME_PATTERN.match(name) is None:
            raise ValueError(f"parameter name must match [a-z0-9_.]+ (gave '{name}')")

        super().__init__(np.array(data, dtype=np.float64), requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter(name='{self.name}', shape={self.shape}, requires_grad={self.requires_grad})"


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    """Wraps arrays and python scalars into constant tensors, passing tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)
