"""Parametric shape families used as a small stand-in dataset.

Every family samples points uniformly by surface area. All shapes are centered at the
origin, with y as the up axis, and fit inside [-1, 1]^3 for parameters within range.
"""

# Standard library imports
import logging
from dataclasses import dataclass
from typing import Optional

# Third party imports
import numpy as np
from scipy.special import elliprg

# Local imports

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShapeFamily:
    """A named family of parametric surfaces.

    Attributes:
        name (str): family id.
        ranges (dict[str, tuple[float, float]]): inclusive range of every parameter.
    """

    name: str
    ranges: dict[str, tuple[float, float]]

    def validate(self, params: dict[str, float]) -> None:
        missing = sorted(set(self.ranges) - set(params))
        extra = sorted(set(params) - set(self.ranges))
        if missing or extra:
            raise ValueError(f"family '{self.name}' takes parameters {sorted(self.ranges)} (missing {missing}, unknown {extra})")
        for key, (low, high) in self.ranges.items():
            if not low <= params[key] <= high:
                raise ValueError(f"'{key}' of family '{self.name}' must lie in [{low}, {high}] (gave {params[key]})")

    def random_params(self, rng: np.random.Generator) -> dict[str, float]:
        return {key: float(rng.uniform(low, high)) for key, (low, high) in self.ranges.items()}


FAMILIES = {
    "sphere": ShapeFamily("sphere", {"radius": (0.5, 1.0)}),
    "box": ShapeFamily("box", {"extent_x": (0.3, 1.0), "extent_y": (0.3, 1.0), "extent_z": (0.3, 1.0)}),
    "cylinder": ShapeFamily("cylinder", {"radius": (0.3, 0.8), "half_height": (0.4, 1.0)}),
    "toy_plane": ShapeFamily(
        "toy_plane",
        {
            "body_length": (0.7, 1.0),
            "body_radius": (0.1, 0.2),
            "wing_span": (0.6, 1.0),
            "wing_chord": (0.15, 0.3),
            "wing_thickness": (0.03, 0.06),
        },
    ),
}


def get_family(name: str) -> ShapeFamily:
    if name not in FAMILIES:
        raise ValueError(f"'family' must be one of {list(FAMILIES)} (gave {name})")
    return FAMILIES[name]


def _unit_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    directions = rng.normal(size=(n, 3))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def _sample_sphere(params: dict[str, float], n: int, rng: np.random.Generator) -> np.ndarray:
    return params["radius"] * _unit_sphere(n, rng)


def _sample_box(params: dict[str, float], n: int, rng: np.random.Generator) -> np.ndarray:
    extents = np.array([params["extent_x"], params["extent_y"], params["extent_z"]])
    # face pair k is perpendicular to axis k
    pair_areas = np.array([extents[1] * extents[2], extents[0] * extents[2], extents[0] * extents[1]])
    axes = rng.choice(3, size=n, p=pair_areas / pair_areas.sum())
    signs = rng.choice([-1.0, 1.0], size=n)
    points = rng.uniform(-1.0, 1.0, size=(n, 3)) * extents
    points[np.arange(n), axes] = signs * extents[axes]
    return points


def _sample_cylinder(params: dict[str, float], n: int, rng: np.random.Generator) -> np.ndarray:
    radius, half_height = params["radius"], params["half_height"]
    lateral_area = 2.0 * np.pi * radius * 2.0 * half_height
    cap_area = np.pi * radius**2
    on_side = rng.uniform(size=n) < lateral_area / (lateral_area + 2.0 * cap_area)

    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    rho = np.where(on_side, radius, radius * np.sqrt(rng.uniform(size=n)))
    y = np.where(on_side, rng.uniform(-half_height, half_height, size=n), rng.choice([-half_height, half_height], size=n))
    return np.column_stack([rho * np.cos(theta), y, rho * np.sin(theta)])


def ellipsoid_area(axes: np.ndarray) -> float:
    """Exact surface area of an ellipsoid with semi-axes (a, b, c)."""
    a, b, c = (float(value) for value in axes)
    return float(4.0 * np.pi * a * b * c * elliprg(1.0 / a**2, 1.0 / b**2, 1.0 / c**2))


def _sample_ellipsoid(axes: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Area-uniform samples by rejection on the stretched unit sphere."""
    a, b, c = axes
    bound = max(b * c, a * c, a * b)
    accepted = []
    count = 0
    while count < n:
        candidates = _unit_sphere(max(2 * (n - count), 64), rng)
        stretch = np.sqrt((b * c * candidates[:, 0]) ** 2 + (a * c * candidates[:, 1]) ** 2 + (a * b * candidates[:, 2]) ** 2)
        keep = candidates[rng.uniform(size=len(candidates)) * bound < stretch] * axes
        accepted.append(keep)
        count += len(keep)
    return np.concatenate(accepted)[:n]


def _inside(points: np.ndarray, axes: np.ndarray) -> np.ndarray:
    return np.sum((points / axes) ** 2, axis=1) < 1.0 - 1e-12


def _sample_toy_plane(params: dict[str, float], n: int, rng: np.random.Generator) -> np.ndarray:
    """Surface of the union of a fuselage ellipsoid (along x) and a wing ellipsoid (along z)."""
    body = np.array([params["body_length"], params["body_radius"], params["body_radius"]])
    wing = np.array([params["wing_chord"], params["wing_thickness"], params["wing_span"]])
    areas = np.array([ellipsoid_area(body), ellipsoid_area(wing)])

    surviving = []
    count = 0
    while count < n:
        pool = 2 * (n - count) + 64
        body_count, wing_count = rng.multinomial(pool, areas / areas.sum())
        body_points = _sample_ellipsoid(body, body_count, rng)
        wing_points = _sample_ellipsoid(wing, wing_count, rng)
        # parts of one surface buried in the other solid are not on the union's surface
        kept = np.concatenate([body_points[~_inside(body_points, wing)], wing_points[~_inside(wing_points, body)]])
        surviving.append(kept[rng.permutation(len(kept))])
        count += len(kept)
    return np.concatenate(surviving)[:n]


_SAMPLERS = {
    "sphere": _sample_sphere,
    "box": _sample_box,
    "cylinder": _sample_cylinder,
    "toy_plane": _sample_toy_plane,
}


def synth_shape(family: str, params: Optional[dict[str, float]], n: int, seed: int, jitter: float = 0.0) -> np.ndarray:
    """Samples n surface points of a shape from a family.

    Args:
        family (str): one of 'sphere', 'box', 'cylinder', 'toy_plane'.
        params (Optional[dict[str, float]]): shape parameters; None draws them from the
            family ranges using the seed.
        n (int): number of points.
        seed (int): random seed.
        jitter (float): standard deviation of Gaussian noise added to every coordinate.
            Defaults to 0.

    Returns:
        cloud (np.ndarray): [n, 3].

    Raises:
        ValueError: if the family is unknown, parameters are out of range or n < 1.

    """
    # Argument checking
    shape_family = get_family(family)
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"'n' must be a positive int (gave {n})")
    if jitter < 0.0:
        raise ValueError(f"'jitter' must be non-negative (gave {jitter})")

    rng = np.random.default_rng(seed)
    if params is None:
        params = shape_family.random_params(rng)
    shape_family.validate(params)

    cloud = _SAMPLERS[family](params, int(n), rng)
    if jitter > 0.0:
        cloud = cloud + rng.normal(scale=jitter, size=cloud.shape)
    return cloud
