"""Differentiable ops over Tensors.

The elementary ops (add, mul, einsum, reshapes, reductions, leaky_relu, max pooling) carry a
graph-building backward and may appear on a re-entrant path such as a critic's input
gradient. tanh, sigmoid, sqrt, reciprocal, concat and batch_norm are first-order only.
"""

# Standard library imports
from dataclasses import dataclass
from typing import Optional, Sequence, Union

# Third party imports
import numpy as np
from scipy.special import expit

# Local imports
from pycloudgen.autodiff.function import Function
from pycloudgen.autodiff.tensor import Tensor, as_tensor
from pycloudgen.utils.constants import batch_norm_eps, batch_norm_momentum, channel_stats_eps
from pycloudgen.utils.exceptions import ShapeMismatchError

Axis = Optional[Union[int, tuple[int, ...]]]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sums grad down to shape, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    leading = grad.ndim - len(shape)
    if leading > 0:
        grad = grad.sum(axis=tuple(range(leading)))
    squeeze_axes = tuple(axis for axis, size in enumerate(shape) if size == 1 and grad.shape[axis] != 1)
    if squeeze_axes:
        grad = grad.sum(axis=squeeze_axes, keepdims=True)
    return grad.reshape(shape)


def _normalize_axes(axis: Axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


# Broadcasting and shape ops


class SumTo(Function):
    tag = "sum_to"

    def __init__(self, shape: tuple[int, ...]) -> None:
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.input_shape = x.shape
        return _unbroadcast(x, self.shape)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (np.broadcast_to(grad, self.input_shape).copy(),)

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        return (broadcast_to(grad, self.input_shape),)


class BroadcastTo(Function):
    tag = "broadcast_to"

    def __init__(self, shape: tuple[int, ...]) -> None:
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.input_shape = x.shape
        return np.broadcast_to(x, self.shape).copy()

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (_unbroadcast(grad, self.input_shape),)

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        return (sum_to(grad, self.input_shape),)


class Reshape(Function):
    tag = "reshape"

    def __init__(self, shape: tuple[int, ...]) -> None:
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.input_shape = x.shape
        return x.reshape(self.shape)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad.reshape(self.input_shape),)

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        return (reshape(grad, self.input_shape),)


class Transpose(Function):
    tag = "transpose"

    def __init__(self, axes: Optional[tuple[int, ...]]) -> None:
        super().__init__()
        self.axes = axes

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.axes is None:
            self.axes = tuple(reversed(range(x.ndim)))
        return np.transpose(x, self.axes)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (np.transpose(grad, np.argsort(self.axes)),)

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        return (transpose(grad, tuple(int(a) for a in np.argsort(self.axes))),)


class Concat(Function):
    tag = "concat"

    def __init__(self, axis: int) -> None:
        super().__init__()
        self.axis = axis

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        self.splits = np.cumsum([array.shape[self.axis] for array in arrays])[:-1]
        return np.concatenate(arrays, axis=self.axis)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return tuple(np.split(grad, self.splits, axis=self.axis))


# Arithmetic


class Add(Function):
    tag = "add"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a + b

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        a, b = self.inputs
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        a, b = self.inputs
        return (
            sum_to(grad, a.shape) if needed[0] else None,
            sum_to(grad, b.shape) if needed[1] else None,
        )


class Sub(Function):
    tag = "sub"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a - b

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        a, b = self.inputs
        return _unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        a, b = self.inputs
        return (
            sum_to(grad, a.shape) if needed[0] else None,
            sum_to(scale(grad, -1.0), b.shape) if needed[1] else None,
        )


class Mul(Function):
    tag = "mul"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a * b

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        a, b = self.inputs
        grad_a = _unbroadcast(grad * b.data, a.shape) if self.needs_input_grad[0] else None
        grad_b = _unbroadcast(grad * a.data, b.shape) if self.needs_input_grad[1] else None
        return grad_a, grad_b

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        a, b = self.inputs
        return (
            sum_to(mul(grad, b), a.shape) if needed[0] else None,
            sum_to(mul(grad, a), b.shape) if needed[1] else None,
        )


class Scale(Function):
    tag = "scale"

    def __init__(self, factor: float) -> None:
        super().__init__()
        self.factor = float(factor)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x * self.factor

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.factor,)

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        return (scale(grad, self.factor),)


class Sum(Function):
    tag = "sum"

    def __init__(self, axis: Axis) -> None:
        super().__init__()
        self.axis = axis

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.input_shape = x.shape
        self.axes = _normalize_axes(self.axis, x.ndim)
        return x.sum(axis=self.axes)

    def _kept_shape(self) -> tuple[int, ...]:
        return tuple(1 if axis in self.axes else size for axis, size in enumerate(self.input_shape))

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (np.broadcast_to(grad.reshape(self._kept_shape()), self.input_shape).copy(),)

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        return (broadcast_to(reshape(grad, self._kept_shape()), self.input_shape),)


class Einsum(Function):
    """Two-operand einsum without repeated indices inside an operand.

    Every index of an operand must appear in the other operand or in the output, which
    keeps both vector-Jacobian products expressible as einsums of the same kind.
    """

    tag = "einsum"

    def __init__(self, subscripts: str) -> None:
        super().__init__()
        operands, output = subscripts.replace(" ", "").split("->")
        self.a_sub, self.b_sub = operands.split(",")
        self.out_sub = output
        for sub, other in [(self.a_sub, self.b_sub), (self.b_sub, self.a_sub)]:
            if len(set(sub)) != len(sub):
                raise ValueError(f"repeated index inside operand '{sub}' is not supported")
            if any(index not in other and index not in output for index in sub):
                raise ValueError(f"operand '{sub}' has an index summed only within itself")
        self.subscripts = f"{self.a_sub},{self.b_sub}->{self.out_sub}"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.einsum(self.subscripts, a, b, optimize=True)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        a, b = self.inputs
        grad_a = np.einsum(f"{self.out_sub},{self.b_sub}->{self.a_sub}", grad, b.data, optimize=True) if self.needs_input_grad[0] else None
        grad_b = np.einsum(f"{self.out_sub},{self.a_sub}->{self.b_sub}", grad, a.data, optimize=True) if self.needs_input_grad[1] else None
        return grad_a, grad_b

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        a, b = self.inputs
        return (
            einsum(f"{self.out_sub},{self.b_sub}->{self.a_sub}", grad, b) if needed[0] else None,
            einsum(f"{self.out_sub},{self.a_sub}->{self.b_sub}", grad, a) if needed[1] else None,
        )


# Activations


class LeakyReLU(Function):
    tag = "leaky_relu"

    def __init__(self, slope: float) -> None:
        super().__init__()
        self.slope = slope

    def forward(self, x: np.ndarray) -> np.ndarray:
        # derivative at exactly 0 is the slope
        self.mask = np.where(x > 0.0, 1.0, self.slope)
        return x * self.mask

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.mask,)

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        return (mul(grad, Tensor(self.mask)),)


class Tanh(Function):
    tag = "tanh"

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.output = np.tanh(x)
        return self.output

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * (1.0 - self.output**2),)


class Sigmoid(Function):
    tag = "sigmoid"

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.output = expit(x)
        return self.output

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.output * (1.0 - self.output),)


class Sqrt(Function):
    tag = "sqrt"

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.output = np.sqrt(x)
        return self.output

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        safe = np.where(self.output > 0.0, self.output, 1.0)
        return (np.where(self.output > 0.0, 0.5 * grad / safe, 0.0),)


class Reciprocal(Function):
    tag = "reciprocal"

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.output = 1.0 / x
        return self.output

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (-grad * self.output**2,)


# Pooling and normalization


class MaxPool(Function):
    """Maximum over the last axis; the gradient goes to the first maximal index."""

    tag = "max_pool"

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.input_shape = x.shape
        self.argmax = np.argmax(x, axis=-1)
        return np.take_along_axis(x, self.argmax[..., None], axis=-1)[..., 0]

    def _one_hot(self) -> np.ndarray:
        one_hot = np.zeros(self.input_shape)
        np.put_along_axis(one_hot, self.argmax[..., None], 1.0, axis=-1)
        return one_hot

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad[..., None] * self._one_hot(),)

    def backward_graph(self, grad: Tensor, needed: tuple[bool, ...]) -> tuple[Optional[Tensor], ...]:
        expanded = broadcast_to(reshape(grad, grad.shape + (1,)), self.input_shape)
        return (mul(expanded, Tensor(self._one_hot())),)


class BatchNormFunction(Function):
    """Per-channel normalization of [B, C] or [B, C, N] input.

    With `mean`/`var` left as None the batch statistics are used (train mode); otherwise
    the given running statistics are treated as constants (eval mode).
    """

    tag = "batch_norm"

    def __init__(self, eps: float, mean: Optional[np.ndarray] = None, var: Optional[np.ndarray] = None) -> None:
        super().__init__()
        self.eps = eps
        self.fixed_mean = mean
        self.fixed_var = var

    def forward(self, x: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
        self.axes = (0,) if x.ndim == 2 else (0, 2)
        self.param_shape = (1, x.shape[1]) if x.ndim == 2 else (1, x.shape[1], 1)
        if self.fixed_mean is None:
            mean = x.mean(axis=self.axes, keepdims=True)
            var = x.var(axis=self.axes, keepdims=True)
        else:
            mean = self.fixed_mean.reshape(self.param_shape)
            var = self.fixed_var.reshape(self.param_shape)
        self.inv_std = 1.0 / np.sqrt(var + self.eps)
        self.x_hat = (x - mean) * self.inv_std
        self.gamma = gamma.reshape(self.param_shape)
        return self.gamma * self.x_hat + beta.reshape(self.param_shape)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        grad_gamma = (grad * self.x_hat).sum(axis=self.axes)
        grad_beta = grad.sum(axis=self.axes)
        grad_x_hat = grad * self.gamma
        if self.fixed_mean is None:
            count = grad.size // grad.shape[1]
            grad_x = (
                self.inv_std
                / count
                * (
                    count * grad_x_hat
                    - grad_x_hat.sum(axis=self.axes, keepdims=True)
                    - self.x_hat * (grad_x_hat * self.x_hat).sum(axis=self.axes, keepdims=True)
                )
            )
        else:
            grad_x = grad_x_hat * self.inv_std
        return grad_x, grad_gamma, grad_beta


# Functional wrappers


def add(a: Union[Tensor, float], b: Union[Tensor, float]) -> Tensor:
    return Add.apply(a, b)


def sub(a: Union[Tensor, float], b: Union[Tensor, float]) -> Tensor:
    return Sub.apply(a, b)


def mul(a: Union[Tensor, float], b: Union[Tensor, float]) -> Tensor:
    return Mul.apply(a, b)


def scale(x: Tensor, factor: float) -> Tensor:
    return Scale.apply(x, factor=factor)


def sum(x: Tensor, axis: Axis = None) -> Tensor:  # pylint: disable=redefined-builtin
    return Sum.apply(x, axis=axis)


def mean(x: Tensor, axis: Axis = None) -> Tensor:
    x = as_tensor(x)
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    return scale(sum(x, axes), 1.0 / count)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(x, shape=tuple(shape))


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    return Transpose.apply(x, axes=None if axes is None else tuple(axes))


def broadcast_to(x: Tensor, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    if tuple(x.shape) == tuple(shape):
        return x
    return BroadcastTo.apply(x, shape=tuple(shape))


def sum_to(x: Tensor, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    if tuple(x.shape) == tuple(shape):
        return x
    return SumTo.apply(x, shape=tuple(shape))


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


def einsum(subscripts: str, a: Tensor, b: Tensor) -> Tensor:
    return Einsum.apply(a, b, subscripts=subscripts)


def sqrt(x: Tensor) -> Tensor:
    return Sqrt.apply(x)


def reciprocal(x: Tensor) -> Tensor:
    return Reciprocal.apply(x)


def affine(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Fully-connected map y = xW + b.

    Args:
        x (Tensor): input of shape [B, I].
        weight (Tensor): weights of shape [I, O].
        bias (Tensor): bias of shape [O].

    Returns:
        y (Tensor): output of shape [B, O].

    Raises:
        ShapeMismatchError: if the dimensions do not agree.

    """
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if x.ndim != 2 or weight.ndim != 2 or bias.ndim != 1:
        raise ShapeMismatchError(f"affine expects [B,I], [I,O], [O]; got {x.shape}, {weight.shape}, {bias.shape}")
    if x.shape[1] != weight.shape[0] or weight.shape[1] != bias.shape[0]:
        raise ShapeMismatchError(f"affine inner dimensions disagree: {x.shape}, {weight.shape}, {bias.shape}")
    return add(einsum("bi,io->bo", x, weight), bias)


def pointwise_conv(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Kernel-size-1 convolution: the same affine map applied at every point.

    Args:
        x (Tensor): input of shape [B, C, N].
        weight (Tensor): weights of shape [C, C'].
        bias (Tensor): bias of shape [C'].

    Returns:
        y (Tensor): output of shape [B, C', N].

    Raises:
        ShapeMismatchError: if the channel dimensions do not agree.

    """
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if x.ndim != 3 or weight.ndim != 2 or bias.ndim != 1:
        raise ShapeMismatchError(f"pointwise_conv expects [B,C,N], [C,C'], [C']; got {x.shape}, {weight.shape}, {bias.shape}")
    if x.shape[1] != weight.shape[0] or weight.shape[1] != bias.shape[0]:
        raise ShapeMismatchError(f"pointwise_conv channels disagree: {x.shape}, {weight.shape}, {bias.shape}")
    return add(einsum("bcn,co->bon", x, weight), reshape(bias, (bias.shape[0], 1)))


def leaky_relu(x: Tensor, slope: float) -> Tensor:
    if not 0.0 < slope < 1.0:
        raise ValueError(f"'slope' must lie in (0, 1) (gave {slope})")
    return LeakyReLU.apply(x, slope=slope)


def tanh_act(x: Tensor) -> Tensor:
    return Tanh.apply(x)


def sigmoid_act(x: Tensor) -> Tensor:
    return Sigmoid.apply(x)


@dataclass
class RunningStats:
    """Running per-channel statistics of a batch-norm layer.

    `mean`/`var` are updated as momentum * old + (1 - momentum) * batch, with the unbiased
    batch variance.
    """

    mean: np.ndarray
    var: np.ndarray
    momentum: float = batch_norm_momentum

    @classmethod
    def initial(cls, channels: int, momentum: float = batch_norm_momentum) -> "RunningStats":
        return cls(np.zeros(channels), np.ones(channels), momentum)

    def update(self, batch_mean: np.ndarray, batch_var: np.ndarray) -> None:
        self.mean = self.momentum * self.mean + (1.0 - self.momentum) * batch_mean
        self.var = self.momentum * self.var + (1.0 - self.momentum) * batch_var


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, state: RunningStats, mode: str, eps: float = batch_norm_eps) -> Tensor:
    """Batch normalization over [B, C] or [B, C, N] input.

    Args:
        x (Tensor): input.
        gamma (Tensor): per-channel scale [C].
        beta (Tensor): per-channel shift [C].
        state (RunningStats): running statistics, updated in train mode.
        mode (str): 'train' (batch statistics) or 'eval' (running statistics).
        eps (float): variance floor. Defaults to 1e-5.

    Returns:
        y (Tensor): normalized output, same shape as x.

    Raises:
        ValueError: if mode is unknown or train mode gets fewer than two samples.
        ShapeMismatchError: if the channel counts disagree.

    """
    # Argument checking
    if not isinstance(state, RunningStats):
        raise TypeError(f"arg 'state' must be of type RunningStats, not {type(state)}")
    if mode not in ["train", "eval"]:
        raise ValueError(f"'mode' must be one of ['train', 'eval'] (gave {mode})")

    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.ndim not in (2, 3) or gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
        raise ShapeMismatchError(f"batch_norm got x {x.shape}, gamma {gamma.shape}, beta {beta.shape}")

    match mode:
        case "train":
            if x.shape[0] < 2:
                raise ValueError(f"batch_norm in train mode needs a batch of at least 2 (gave {x.shape[0]})")
            axes = (0,) if x.ndim == 2 else (0, 2)
            count = x.size // x.shape[1]
            batch_mean = x.data.mean(axis=axes)
            batch_var = x.data.var(axis=axes)
            state.update(batch_mean, batch_var * count / (count - 1))
            return BatchNormFunction.apply(x, gamma, beta, eps=eps)
        case "eval":
            return BatchNormFunction.apply(x, gamma, beta, eps=eps, mean=state.mean, var=state.var)


def channel_stats(x: Tensor, eps: float = channel_stats_eps) -> tuple[Tensor, Tensor]:
    """Per-instance, per-channel mean and standard deviation over the point axis.

    Args:
        x (Tensor): input [B, C, N], N >= 1.
        eps (float): added to the variance under the square root. Defaults to 1e-5.

    Returns:
        mu (Tensor): means [B, C].
        sigma (Tensor): sqrt(var + eps) [B, C].

    """
    x = as_tensor(x)
    if x.ndim != 3 or x.shape[2] < 1:
        raise ShapeMismatchError(f"channel_stats expects [B,C,N] with N >= 1, got {x.shape}")
    batch, channels, _ = x.shape
    mu = mean(x, axis=2)
    centered = sub(x, reshape(mu, (batch, channels, 1)))
    var = mean(mul(centered, centered), axis=2)
    return mu, sqrt(add(var, eps))


def pool_points(x: Tensor, kind: str) -> Tensor:
    """Symmetric reduction over the point axis of [B, C, N] input.

    Args:
        x (Tensor): input [B, C, N].
        kind (str): 'max' or 'avg'.

    Returns:
        pooled (Tensor): [B, C].

    """
    # Argument checking
    if kind not in ["max", "avg"]:
        raise ValueError(f"'kind' must be one of ['max', 'avg'] (gave {kind})")
    x = as_tensor(x)
    if x.ndim != 3 or x.shape[2] < 1:
        raise ShapeMismatchError(f"pool_points expects [B,C,N] with N >= 1, got {x.shape}")

    match kind:
        case "max":
            return MaxPool.apply(x)
        case "avg":
            return mean(x, axis=2)
