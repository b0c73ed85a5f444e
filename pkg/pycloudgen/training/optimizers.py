"""Adam optimizer and the step learning-rate schedule."""

# Standard library imports
from dataclasses import dataclass, field
from typing import Optional, Sequence

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import Parameter
from pycloudgen.training.configs import StageOneConfig
from pycloudgen.utils.constants import adam_eps
from pycloudgen.utils.exceptions import ShapeMismatchError


@dataclass
class AdamState:
    """Moments and step counter of one Adam optimizer.

    Attributes:
        lr (float): learning rate.
        betas (tuple[float, float]): decay rates of the first and second moments.
        eps (float): denominator floor.
        step (int): number of updates applied so far.
        m (dict[str, np.ndarray]): first moments keyed by parameter name.
        v (dict[str, np.ndarray]): second moments keyed by parameter name.
    """

    lr: float
    betas: tuple[float, float]
    eps: float = adam_eps
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lr < 0.0:
            raise ValueError(f"'lr' must be non-negative (gave {self.lr})")
        if not all(0.0 <= beta < 1.0 for beta in self.betas):
            raise ValueError(f"'betas' must lie in [0, 1) (gave {self.betas})")


def adam_step(params: Sequence[Parameter], grads: Sequence[Optional[np.ndarray]], state: AdamState) -> list[Parameter]:
    """Applies one bias-corrected Adam update.

    Parameters receive new arrays; arrays shared with earlier snapshots are never written.
    A missing gradient counts as zero.

    Args:
        params (Sequence[Parameter]): parameters to update.
        grads (Sequence[Optional[np.ndarray]]): gradients aligned with params.
        state (AdamState): optimizer state, advanced by one step.

    Returns:
        params (list[Parameter]): the updated parameters.

    Raises:
        ShapeMismatchError: if a gradient or stored moment does not match its parameter.

    """
    # Argument checking
    if len(params) != len(grads):
        raise ShapeMismatchError(f"{len(params)} parameters but {len(grads)} gradients")

    state.step += 1
    beta1, beta2 = state.betas
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step

    for param, grad in zip(params, grads):
        grad = np.zeros_like(param.data) if grad is None else np.asarray(grad, dtype=np.float64)
        if grad.shape != param.shape:
            raise ShapeMismatchError(f"gradient of '{param.name}' has shape {grad.shape}, expected {param.shape}")
        m = state.m.get(param.name, np.zeros_like(param.data))
        v = state.v.get(param.name, np.zeros_like(param.data))
        if m.shape != param.shape or v.shape != param.shape:
            raise ShapeMismatchError(f"stored moments of '{param.name}' do not match its shape {param.shape}")

        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        state.m[param.name] = m
        state.v[param.name] = v
        param.data = param.data - state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return list(params)


def lr_schedule(epoch: int, cfg: StageOneConfig) -> float:
    """Step schedule: the base rate before `decay_epoch`, base * `decay_ratio` from then on."""
    if epoch < 0:
        raise ValueError(f"'epoch' must be non-negative (gave {epoch})")
    return cfg.lr if epoch < cfg.decay_epoch else cfg.lr * cfg.decay_ratio
