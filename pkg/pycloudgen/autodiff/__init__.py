from pycloudgen.autodiff.graph import backward, input_gradient_node
from pycloudgen.autodiff.ops import (
    RunningStats,
    affine,
    batch_norm,
    channel_stats,
    leaky_relu,
    pointwise_conv,
    pool_points,
    sigmoid_act,
    tanh_act,
)
from pycloudgen.autodiff.tensor import Parameter, Tensor, enable_grad, is_grad_enabled, no_grad, set_debug_checks

__all__ = [
    "Parameter",
    "RunningStats",
    "Tensor",
    "affine",
    "backward",
    "batch_norm",
    "channel_stats",
    "enable_grad",
    "input_gradient_node",
    "is_grad_enabled",
    "leaky_relu",
    "no_grad",
    "pointwise_conv",
    "pool_points",
    "set_debug_checks",
    "sigmoid_act",
    "tanh_act",
]
