"""Sampling from trained networks: prior draws, generation and latent interpolation."""

# Standard library imports
from typing import Optional, Sequence

# Third party imports
import numpy as np

# Local imports
from pycloudgen.autodiff import no_grad
from pycloudgen.networks.decoder import Decoder
from pycloudgen.networks.mapper import Mapper
from pycloudgen.utils.exceptions import ShapeMismatchError


def sample_prior(count: int, latent_dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draws `count` prior samples w ~ N(0, I) of size latent_dim."""
    if count < 1:
        raise ValueError(f"'count' must be at least 1 (gave {count})")
    return rng.standard_normal(size=(count, latent_dim))


def generate(w: np.ndarray, mapper: Optional[Mapper], decoder: Decoder) -> np.ndarray:
    """Decodes mapped prior samples into clouds.

    Both networks are switched to eval mode, so the result depends on w only.

    Args:
        w (np.ndarray): prior samples [B, latent_dim] (or a single [latent_dim] sample).
        mapper (Optional[Mapper]): mapping network; None feeds w straight to the decoder.
        decoder (Decoder): style-aware decoder.

    Returns:
        clouds (np.ndarray): [B, num_points, 3].

    """
    w = np.atleast_2d(np.asarray(w, dtype=np.float64))
    if w.shape[1] != decoder.config.latent_dim:
        raise ShapeMismatchError(f"prior samples must have {decoder.config.latent_dim} components, got {w.shape[1]}")

    with no_grad():
        decoder.eval()
        z = w
        if mapper is not None:
            mapper.eval()
            z = mapper(w).data
        return decoder(z).data.copy()


def interpolate_latent(z_a: np.ndarray, z_b: np.ndarray, alphas: Sequence[float]) -> list[np.ndarray]:
    """Points (1 - alpha) z_a + alpha z_b on the line through two codes.

    Alphas outside [0, 1] extrapolate beyond the endpoints.
    """
    z_a = np.asarray(z_a, dtype=np.float64)
    z_b = np.asarray(z_b, dtype=np.float64)
    if z_a.shape != z_b.shape:
        raise ShapeMismatchError(f"latent codes differ in shape: {z_a.shape} != {z_b.shape}")
    return [(1.0 - alpha) * z_a + alpha * z_b for alpha in alphas]
