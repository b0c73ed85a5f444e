"""Point-set distances used both as training losses and as evaluation metrics.

Chamfer distance is squared-Euclidean, averaged per side and summed over both sides.
EMD is the mean Euclidean length of the matched pairs of an equal-size bijection.
"""

# Standard library imports
import logging
from dataclasses import dataclass, field
from typing import Optional

# Third party imports
import numpy as np
from numba import njit
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

# Local imports
from pycloudgen.utils.constants import hungarian_max_points, zero_distance_threshold
from pycloudgen.utils.exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)

LOSS_VARIANTS = ["cd", "emd", "both"]


@dataclass
class AuctionConfig:
    """Parameters of the epsilon-scaling auction.

    Attributes:
        eps_start (Optional[float]): first-phase bid increment. None means a quarter of an
            upper bound on the largest pairwise distance.
        eps_scale_factor (float): per-phase multiplier, in (0, 1).
        eps_min (Optional[float]): final-phase increment. None means 1 / (8 N).
        max_rounds (Optional[int]): total bid budget. None means 10 N^2.
    """

    eps_start: Optional[float] = None
    eps_scale_factor: float = 0.25
    eps_min: Optional[float] = None
    max_rounds: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.eps_scale_factor < 1.0:
            raise ValueError(f"'eps_scale_factor' must lie in (0, 1) (gave {self.eps_scale_factor})")
        if self.eps_min is not None and self.eps_min <= 0.0:
            raise ValueError(f"'eps_min' must be positive (gave {self.eps_min})")
        if self.eps_start is not None and self.eps_min is not None and self.eps_start <= self.eps_min:
            raise ValueError(f"'eps_start' must exceed 'eps_min' (gave {self.eps_start} <= {self.eps_min})")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError(f"'max_rounds' must be positive (gave {self.max_rounds})")

    def resolve(self, x: np.ndarray, y: np.ndarray) -> tuple[float, float, int]:
        """Concrete (eps_start, eps_min, max_rounds) for a pair of clouds."""
        n = x.shape[0]
        eps_min = self.eps_min if self.eps_min is not None else 1.0 / (8.0 * n)
        if self.eps_start is not None:
            eps_start = self.eps_start
        else:
            both = np.vstack([x, y])
            max_cost_bound = float(np.linalg.norm(both.max(axis=0) - both.min(axis=0)))
            eps_start = max(max_cost_bound / 4.0, eps_min)
        max_rounds = self.max_rounds if self.max_rounds is not None else 10 * n * n
        return eps_start, eps_min, max_rounds


@dataclass
class Assignment:
    """A bijection from the points of X to the points of Y.

    Attributes:
        perm (np.ndarray): perm[i] is the index in Y matched to X[i].
        cost (float): mean Euclidean length of the matched pairs.
        converged (bool): False when the auction ran out of bids and the tail of the
            matching was completed greedily.
        bids (int): number of bids the auction placed (0 for exact solvers).
    """

    perm: np.ndarray
    cost: float
    converged: bool = True
    bids: int = field(default=0)


def _check_cloud(cloud: np.ndarray, arg_name: str) -> np.ndarray:
    if not isinstance(cloud, np.ndarray):
        raise TypeError(f"arg '{arg_name}' must be of type np.ndarray, not {type(cloud)}")
    if cloud.ndim != 2 or cloud.shape[1] != 3:
        raise ShapeMismatchError(f"'{arg_name}' must have shape [N, 3], not {cloud.shape}")
    if cloud.shape[0] < 1:
        raise ValueError(f"'{arg_name}' must contain at least one point")
    return np.asarray(cloud, dtype=np.float64)


def _check_same_size(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[0] != y.shape[0]:
        raise ShapeMismatchError(f"clouds must have the same number of points ({x.shape[0]} != {y.shape[0]})")


def matched_cost(x: np.ndarray, y: np.ndarray, perm: np.ndarray) -> float:
    """Mean Euclidean distance between x[i] and y[perm[i]]."""
    return float(np.linalg.norm(x - y[perm], axis=1).mean())


def chamfer(x: np.ndarray, y: np.ndarray) -> float:
    """Chamfer distance between two point clouds.

    Args:
        x (np.ndarray): cloud [N, 3].
        y (np.ndarray): cloud [M, 3].

    Returns:
        distance (float): mean_x min_y |x-y|^2 + mean_y min_x |x-y|^2.

    Raises:
        TypeError: if arguments are not arrays.
        ValueError: if either cloud is empty.

    """
    # Argument checking
    x = _check_cloud(x, "x")
    y = _check_cloud(y, "y")

    squared = cdist(x, y, "sqeuclidean")
    return float(squared.min(axis=1).mean() + squared.min(axis=0).mean())


def chamfer_grad(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of `chamfer(x, y)` with respect to x, nearest neighbours held fixed.

    Ties in the nearest-neighbour search resolve to the lowest index.

    Args:
        x (np.ndarray): cloud [N, 3].
        y (np.ndarray): cloud [M, 3].

    Returns:
        grad (np.ndarray): [N, 3].

    """
    # Argument checking
    x = _check_cloud(x, "x")
    y = _check_cloud(y, "y")

    squared = cdist(x, y, "sqeuclidean")
    nearest_in_y = squared.argmin(axis=1)
    nearest_in_x = squared.argmin(axis=0)

    grad = 2.0 * (x - y[nearest_in_y]) / x.shape[0]
    np.add.at(grad, nearest_in_x, 2.0 * (x[nearest_in_x] - y) / y.shape[0])
    return grad


@njit(cache=False, nogil=True)
def _auction_kernel(x, y, eps_start, eps_scale_factor, eps_min, max_bids):  # pragma: no cover - compiled
    n = x.shape[0]
    prices = np.zeros(n)
    owner = np.full(n, -1, dtype=np.int64)
    assigned = np.full(n, -1, dtype=np.int64)
    pending = np.empty(n, dtype=np.int64)
    bids = 0
    eps = eps_start
    converged = True

    while True:
        # each phase restarts the matching but keeps the prices
        for k in range(n):
            owner[k] = -1
            assigned[k] = -1
            pending[k] = n - 1 - k
        count = n

        while count > 0:
            if bids >= max_bids:
                converged = False
                break
            count -= 1
            bidder = pending[count]

            best_item = -1
            best_value = -np.inf
            second_value = -np.inf
            for item in range(n):
                dx = x[bidder, 0] - y[item, 0]
                dy = x[bidder, 1] - y[item, 1]
                dz = x[bidder, 2] - y[item, 2]
                value = -np.sqrt(dx * dx + dy * dy + dz * dz) - prices[item]
                if value > best_value:
                    second_value = best_value
                    best_value = value
                    best_item = item
                elif value > second_value:
                    second_value = value

            if n == 1:
                increment = eps
            else:
                increment = best_value - second_value + eps
            prices[best_item] += increment

            previous = owner[best_item]
            owner[best_item] = bidder
            assigned[bidder] = best_item
            if previous >= 0:
                assigned[previous] = -1
                pending[count] = previous
                count += 1
            bids += 1

        if not converged or eps <= eps_min:
            break
        eps = max(eps * eps_scale_factor, eps_min)

    return assigned, owner, converged, bids


def emd_auction(x: np.ndarray, y: np.ndarray, cfg: Optional[AuctionConfig] = None) -> tuple[float, Assignment]:
    """Earth mover's distance via the epsilon-scaling auction algorithm.

    Memory beyond the two clouds is O(N): prices and ownership arrays, with every
    distance recomputed when a bidder scans the items.

    Args:
        x (np.ndarray): cloud [N, 3].
        y (np.ndarray): cloud [N, 3].
        cfg (Optional[AuctionConfig]): auction parameters. Defaults to AuctionConfig().

    Returns:
        cost (float): mean matched Euclidean distance.
        assignment (Assignment): the matching; `converged` is False if the bid budget ran out.

    Raises:
        ShapeMismatchError: if the clouds differ in size.

    """
    # Argument checking
    x = _check_cloud(x, "x")
    y = _check_cloud(y, "y")
    _check_same_size(x, y)
    if cfg is None:
        cfg = AuctionConfig()
    if not isinstance(cfg, AuctionConfig):
        raise TypeError(f"arg 'cfg' must be of type AuctionConfig, not {type(cfg)}")

    eps_start, eps_min, max_rounds = cfg.resolve(x, y)
    assigned, owner, converged, bids = _auction_kernel(
        np.ascontiguousarray(x), np.ascontiguousarray(y), eps_start, cfg.eps_scale_factor, eps_min, max_rounds
    )

    if not converged:
        free_items = iter(np.flatnonzero(owner < 0))
        for bidder in np.flatnonzero(assigned < 0):
            assigned[bidder] = next(free_items)
        logger.warning(f"auction exhausted its budget of {max_rounds} bids; returning best-so-far matching")

    perm = assigned.astype(np.int64)
    cost = matched_cost(x, y, perm)
    return cost, Assignment(perm=perm, cost=cost, converged=bool(converged), bids=int(bids))


def emd_grad(x: np.ndarray, y: np.ndarray, assignment: Assignment) -> np.ndarray:
    """Gradient of the mean matched Euclidean distance with respect to x, matching frozen.

    Rows whose matched distance is below 1e-12 get a zero gradient.

    Args:
        x (np.ndarray): cloud [N, 3].
        y (np.ndarray): cloud [N, 3].
        assignment (Assignment): matching from x to y.

    Returns:
        grad (np.ndarray): [N, 3].

    """
    # Argument checking
    x = _check_cloud(x, "x")
    y = _check_cloud(y, "y")
    _check_same_size(x, y)
    if not isinstance(assignment, Assignment):
        raise TypeError(f"arg 'assignment' must be of type Assignment, not {type(assignment)}")

    difference = x - y[assignment.perm]
    lengths = np.linalg.norm(difference, axis=1, keepdims=True)
    safe = np.where(lengths < zero_distance_threshold, 1.0, lengths)
    grad = np.where(lengths < zero_distance_threshold, 0.0, difference / safe)
    return grad / x.shape[0]


def emd_hungarian(x: np.ndarray, y: np.ndarray) -> tuple[float, Assignment]:
    """Exact earth mover's distance by the Hungarian method (oracle for small clouds).

    Args:
        x (np.ndarray): cloud [N, 3].
        y (np.ndarray): cloud [N, 3], N <= 512.

    Returns:
        cost (float): mean matched Euclidean distance of an optimal bijection.
        assignment (Assignment): the optimal matching.

    Raises:
        ShapeMismatchError: if the clouds differ in size.
        ValueError: if N exceeds 512.

    """
    # Argument checking
    x = _check_cloud(x, "x")
    y = _check_cloud(y, "y")
    _check_same_size(x, y)
    if x.shape[0] > hungarian_max_points:
        raise ValueError(f"Hungarian oracle is limited to {hungarian_max_points} points (gave {x.shape[0]})")

    _, perm = linear_sum_assignment(cdist(x, y, "euclidean"))
    perm = perm.astype(np.int64)
    cost = matched_cost(x, y, perm)
    return cost, Assignment(perm=perm, cost=cost)


@dataclass
class ReconLossTerms:
    """Both distance terms between a reconstruction and its target, and the gradient of
    the selected combination with respect to the reconstruction."""

    value: float
    grad: np.ndarray
    cd: float
    emd: float
    assignment: Assignment


def recon_loss_terms(x: np.ndarray, y: np.ndarray, variant: str = "both", cfg: Optional[AuctionConfig] = None) -> ReconLossTerms:
    """Compound reconstruction loss with both distances always measured.

    Args:
        x (np.ndarray): reconstruction [N, 3].
        y (np.ndarray): target [N, 3].
        variant (str): 'cd', 'emd' or 'both'. Selects which terms enter value and grad.
        cfg (Optional[AuctionConfig]): auction parameters.

    Returns:
        terms (ReconLossTerms)

    """
    # Argument checking
    if variant not in LOSS_VARIANTS:
        raise ValueError(f"'variant' must be one of {LOSS_VARIANTS} (gave {variant})")
    x = _check_cloud(x, "x")
    y = _check_cloud(y, "y")
    _check_same_size(x, y)

    cd = chamfer(x, y)
    emd, assignment = emd_auction(x, y, cfg)

    match variant:
        case "cd":
            value, grad = cd, chamfer_grad(x, y)
        case "emd":
            value, grad = emd, emd_grad(x, y, assignment)
        case "both":
            value, grad = cd + emd, chamfer_grad(x, y) + emd_grad(x, y, assignment)
    return ReconLossTerms(value=value, grad=grad, cd=cd, emd=emd, assignment=assignment)


def recon_loss(x: np.ndarray, y: np.ndarray, variant: str = "both", cfg: Optional[AuctionConfig] = None) -> tuple[float, np.ndarray]:
    """Reconstruction loss CD + EMD (or either alone) and its gradient with respect to x.

    Args:
        x (np.ndarray): reconstruction [N, 3].
        y (np.ndarray): target [N, 3].
        variant (str): 'cd', 'emd' or 'both'. Defaults to 'both'.
        cfg (Optional[AuctionConfig]): auction parameters.

    Returns:
        value (float): the loss.
        grad (np.ndarray): d value / d x, [N, 3].

    """
    terms = recon_loss_terms(x, y, variant, cfg)
    return terms.value, terms.grad
