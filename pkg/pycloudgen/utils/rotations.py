"""Functions that rotate point clouds about the gravity (y) axis.

These are standalone augmentation helpers. No training loop applies them; callers that
want rotation-augmented data rotate the clouds before building a dataset.
"""

# Standard library imports

# Third-party imports
import numpy as np
from scipy.spatial.transform import Rotation as R

# Local imports
from pycloudgen.utils.exceptions import ShapeMismatchError


def gravity_axis_rotation(angle: float) -> R:
    """Rotation of `angle` radians about the y-axis, y pointing up.

    Args:
        angle (float): rotation angle in radians.

    Returns:
        rotation (R): a scipy.spatial.transform.Rotation object.

    Raises:
        TypeError: if angle is not a number.

    """
    # Argument checking
    if not isinstance(angle, (int, float, np.floating)):
        raise TypeError(f"arg 'angle' must be of type float, not {type(angle)}")

    return R.from_euler("y", float(angle))


def rotate_gravity_axis(cloud: np.ndarray, angle: float) -> np.ndarray:
    """Rotates every point of a cloud about the gravity axis.

    Args:
        cloud (np.ndarray): points [N, 3].
        angle (float): rotation angle in radians.

    Returns:
        rotated (np.ndarray): points [N, 3].

    Raises:
        TypeError: if an argument is not of expected type.
        ShapeMismatchError: if the cloud is not [N, 3].

    """
    # Argument checking
    if not isinstance(cloud, np.ndarray):
        raise TypeError(f"arg 'cloud' must be of type np.ndarray, not {type(cloud)}")
    if cloud.ndim != 2 or cloud.shape[1] != 3:
        raise ShapeMismatchError(f"'cloud' must have shape [N, 3], not {cloud.shape}")

    return gravity_axis_rotation(angle).apply(cloud.astype(np.float64))


def random_gravity_rotation(cloud: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Augmentation: rotates a cloud by a uniform random angle in [0, 2 pi)."""
    return rotate_gravity_axis(cloud, float(rng.uniform(0.0, 2.0 * np.pi)))
