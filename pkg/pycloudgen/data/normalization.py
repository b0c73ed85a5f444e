"""Unit-cube normalization of point clouds and its inverse."""

# Standard library imports
from dataclasses import dataclass

# Third party imports
import numpy as np

# Local imports
from pycloudgen.utils.exceptions import ShapeMismatchError


@dataclass(frozen=True)
class NormalizationRecord:
    """How a cloud was mapped into [-1, 1]^3.

    Attributes:
        center (np.ndarray): bounding-box midpoint subtracted from every point.
        scale (float): half the largest bounding-box extent the centered points were divided by.
    """

    center: np.ndarray
    scale: float

    @classmethod
    def identity(cls) -> "NormalizationRecord":
        return cls(center=np.zeros(3), scale=1.0)


def normalize_unit_cube(cloud: np.ndarray) -> tuple[np.ndarray, NormalizationRecord]:
    """Re-centers a cloud on its bounding-box midpoint and scales it into [-1, 1]^3.

    At least one coordinate of the result reaches -1 or +1.

    Args:
        cloud (np.ndarray): points [N, 3], N >= 1.

    Returns:
        normalized (np.ndarray): points [N, 3] inside the cube.
        record (NormalizationRecord): the center and scale used.

    Raises:
        TypeError: if cloud is not an np.ndarray.
        ShapeMismatchError: if cloud is not [N, 3].
        ValueError: if the cloud has zero extent.

    """
    # Argument checking
    if not isinstance(cloud, np.ndarray):
        raise TypeError(f"arg 'cloud' must be of type np.ndarray, not {type(cloud)}")
    if cloud.ndim != 2 or cloud.shape[1] != 3 or cloud.shape[0] < 1:
        raise ShapeMismatchError(f"'cloud' must have shape [N, 3] with N >= 1, not {cloud.shape}")

    lower = cloud.min(axis=0)
    upper = cloud.max(axis=0)
    scale = float((upper - lower).max() / 2.0)
    if not scale > 0.0:
        raise ValueError("cannot normalize a cloud whose points are all identical")

    center = (lower + upper) / 2.0
    normalized = (cloud - center) / scale
    return np.clip(normalized, -1.0, 1.0), NormalizationRecord(center=center, scale=scale)


def denormalize(normalized: np.ndarray, record: NormalizationRecord) -> np.ndarray:
    """Maps normalized points back with `points * scale + center`.

    Args:
        normalized (np.ndarray): points [N, 3].
        record (NormalizationRecord): the record returned by normalize_unit_cube.

    Returns:
        cloud (np.ndarray): points [N, 3] in the original frame.

    Raises:
        ValueError: if the record scale is not positive.

    """
    # Argument checking
    if not isinstance(normalized, np.ndarray):
        raise TypeError(f"arg 'normalized' must be of type np.ndarray, not {type(normalized)}")
    if not isinstance(record, NormalizationRecord):
        raise TypeError(f"arg 'record' must be of type NormalizationRecord, not {type(record)}")
    if not record.scale > 0.0:
        raise ValueError(f"record scale must be positive (gave {record.scale})")

    return normalized * record.scale + record.center
