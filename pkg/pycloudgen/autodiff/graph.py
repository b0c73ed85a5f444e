"""Reverse-mode traversal of recorded graphs: first-order backward and the
graph-building input gradient used by gradient penalties."""

# Standard library imports
import logging

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff.tensor import Tensor, enable_grad
from pycloudgen.utils.exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)


def topological_order(root: Tensor) -> list[Tensor]:
    """Returns the tensors reachable from root through grad-tracking edges, every
    tensor listed after all of its inputs."""
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        tensor, expanded = stack.pop()
        if expanded:
            order.append(tensor)
            continue
        if id(tensor) in visited:
            continue
        visited.add(id(tensor))
        stack.append((tensor, True))
        if tensor.node is not None:
            for parent in tensor.node.inputs:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populates `grad` on every grad-requiring leaf that `loss` depends on.

    Gradients accumulate into existing leaf buffers, so a leaf consumed several times
    (or across several calls) receives the sum of its contributions.

    Args:
        loss (Tensor): a tensor holding exactly one value.

    Returns:
        None

    Raises:
        TypeError: if loss is not a Tensor.
        ShapeMismatchError: if loss is not scalar.
        ValueError: if loss does not depend on any grad-requiring tensor.

    """
    # Argument checking
    if not isinstance(loss, Tensor):
        raise TypeError(f"arg 'loss' must be of type Tensor, not {type(loss)}")
    if loss.size != 1:
        raise ShapeMismatchError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("loss does not depend on any tensor that requires grad")

    order = topological_order(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}

    for tensor in reversed(order):
        grad = grads.pop(id(tensor), None)
        if grad is None:
            continue
        if tensor.node is None:
            tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad
            continue

        input_grads = tensor.node.function.backward(grad)
        for parent, parent_grad in zip(tensor.node.inputs, input_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = parent_grad if key not in grads else grads[key] + parent_grad


def input_gradient_node(scalar_out: Tensor, wrt: Tensor) -> Tensor:
    """Differentiates scalar_out with respect to wrt, recording the computation.

    The returned tensor is a graph node: calling `backward` on anything built from it
    differentiates the input gradient itself, e.g. with respect to network parameters.

    Args:
        scalar_out (Tensor): scalar value depending on wrt.
        wrt (Tensor): the tensor to differentiate with respect to; must require grad.

    Returns:
        input_gradient (Tensor): d scalar_out / d wrt, same shape as wrt.

    Raises:
        ShapeMismatchError: if scalar_out is not scalar.
        ValueError: if scalar_out does not depend on wrt.
        SecondOrderUnsupportedError: if an op between wrt and scalar_out has no
            graph-building backward.

    """
    # Argument checking
    if not isinstance(scalar_out, Tensor):
        raise TypeError(f"arg 'scalar_out' must be of type Tensor, not {type(scalar_out)}")
    if not isinstance(wrt, Tensor):
        raise TypeError(f"arg 'wrt' must be of type Tensor, not {type(wrt)}")
    if scalar_out.size != 1:
        raise ShapeMismatchError(f"input gradients need a scalar output, got shape {scalar_out.shape}")
    if not wrt.requires_grad:
        raise ValueError("arg 'wrt' must require grad")

    order = topological_order(scalar_out)

    # tensors whose value depends on wrt
    reaches = set()
    for tensor in order:
        if tensor is wrt or (
            tensor.node is not None and any(id(parent) in reaches for parent in tensor.node.inputs)
        ):
            reaches.add(id(tensor))
    if id(wrt) not in reaches or id(scalar_out) not in reaches:
        raise ValueError("scalar_out does not depend on wrt")

    grads: dict[int, Tensor] = {id(scalar_out): Tensor(np.ones_like(scalar_out.data))}
    with enable_grad():
        for tensor in reversed(order):
            if id(tensor) not in reaches:
                continue
            grad = grads.pop(id(tensor), None)
            if grad is None:
                continue
            if tensor is wrt:
                return grad

            parents = tensor.node.inputs
            needed = tuple(id(parent) in reaches for parent in parents)
            input_grads = tensor.node.function.backward_graph(grad, needed)
            for parent, parent_grad, is_needed in zip(parents, input_grads, needed):
                if not is_needed or parent_grad is None:
                    continue
                key = id(parent)
                grads[key] = parent_grad if key not in grads else grads[key] + parent_grad

    # wrt is reachable but received no gradient (e.g. all paths multiply by zero masks)
    return Tensor(np.zeros_like(wrt.data))
