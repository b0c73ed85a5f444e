# Standard library imports

# Third party imports
import numpy as np

# Local imports
from pycloudgen.utils.exceptions import ShapeMismatchError


def sample_points(cloud: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Draws n points of a cloud uniformly at random.

    Sampling is without replacement when n <= |cloud| and with replacement otherwise.

    Args:
        cloud (np.ndarray): source points [M, 3].
        n (int): number of points to draw, at least 1.
        seed (int): random seed.

    Returns:
        sample (np.ndarray): [n, 3].

    Raises:
        TypeError: if arguments are not of expected type.
        ValueError: if n < 1 or the source is empty.

    """
    # Argument checking
    if not isinstance(cloud, np.ndarray):
        raise TypeError(f"arg 'cloud' must be of type np.ndarray, not {type(cloud)}")
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise TypeError(f"arg 'n' must be of type int, not {type(n)}")
    if cloud.ndim != 2 or cloud.shape[1] != 3:
        raise ShapeMismatchError(f"'cloud' must have shape [M, 3], not {cloud.shape}")
    if cloud.shape[0] == 0:
        raise ValueError("cannot sample from an empty cloud")
    if n < 1:
        raise ValueError(f"'n' must be at least 1 (gave {n})")

    rng = np.random.default_rng(seed)
    replace = n > cloud.shape[0]
    indices = rng.choice(cloud.shape[0], size=n, replace=replace)
    return cloud[indices]
