# Standard library imports
from abc import ABC, abstractmethod
from typing import Optional, Union

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff.tensor import GraphNode, Tensor, as_tensor, debug_checks_enabled, is_grad_enabled
from pycloudgen.utils.exceptions import NonFiniteError, SecondOrderUnsupportedError


class Function(ABC):
    """A differentiable op. One instance is created per application and keeps whatever
    the backward pass needs.

    Subclasses implement `forward` and `backward` on raw arrays. Ops that may sit on a
    re-entrant differentiation path also implement `backward_graph`, which expresses the
    same vector-Jacobian product with tensor ops so the result is itself differentiable.
    """

    tag = "function"

    def __init__(self) -> None:
        self.inputs: tuple[Tensor, ...] = ()
        self.needs_input_grad: tuple[bool, ...] = ()

    @abstractmethod
    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        pass

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        raise SecondOrderUnsupportedError(f"op '{self.tag}' does not support second-order differentiation")

    @classmethod
    def apply(cls, *inputs: Union[Tensor, np.ndarray, float], **kwargs) -> Tensor:
        tensors = tuple(as_tensor(value) for value in inputs)
        function = cls(**kwargs)
        function.inputs = tensors
        function.needs_input_grad = tuple(tensor.requires_grad for tensor in tensors)

        data = function.forward(*(tensor.data for tensor in tensors))
        if debug_checks_enabled() and not np.all(np.isfinite(data)):
            raise NonFiniteError(f"op '{function.tag}' produced non-finite values")

        requires_grad = is_grad_enabled() and any(function.needs_input_grad)
        output = Tensor(data, requires_grad=requires_grad)
        if requires_grad:
            output.node = GraphNode(function, tensors)
        else:
            # nothing will call backward on this instance
            function.inputs = ()
        return output
