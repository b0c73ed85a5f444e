# Standard library imports
import logging
from pathlib import Path
from typing import Callable

# Third party imports
import numpy as np
import pandas as pd
import pytest

# Local imports
from pycloudgen.data.dataset import CloudDataset
from pycloudgen.data.synthetic import synth_shape
from pycloudgen.networks.network import NetworkConfig

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(autouse=True)
def package_logger():
    # the CLI installs its own handlers; hand records back to pytest afterwards
    yield
    logger = logging.getLogger("pycloudgen")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def validation_data() -> Callable[[str], pd.DataFrame]:
    def load(name: str) -> pd.DataFrame:
        return pd.read_csv(DATA_DIR / name, comment="#", dtype=str)

    return load


@pytest.fixture()
def tiny_config():
    return NetworkConfig(
        num_points=32,
        latent_dim=8,
        encoder_widths=(8, 16),
        decoder_widths=(8, 16),
        disc_widths=(8, 16),
        disc_hidden=8,
        mapper_layers=2,
        mapper_width=8,
        se_reduction=4,
    )


@pytest.fixture()
def tiny_dataset():
    families = ["sphere", "box", "cylinder", "toy_plane"]
    clouds = [synth_shape(families[i % 4], None, 32, seed=i) for i in range(8)]
    return CloudDataset.from_arrays(clouds, [families[i % 4] for i in range(8)])


@pytest.fixture(scope="session")
def desk_config():
    return NetworkConfig(
        num_points=256,
        latent_dim=16,
        encoder_widths=(16, 32),
        decoder_widths=(16, 32),
        disc_widths=(16, 32),
        disc_hidden=16,
        mapper_layers=2,
        mapper_width=16,
        se_reduction=4,
    )


@pytest.fixture(scope="session")
def desk_dataset():
    families = ["sphere", "box", "cylinder", "toy_plane"]
    clouds = [synth_shape(families[i % 4], None, 256, seed=100 + i) for i in range(64)]
    return CloudDataset.from_arrays(clouds, [families[i % 4] for i in range(64)])


@pytest.fixture()
def finite_difference() -> Callable[..., np.ndarray]:
    """Central differences of a scalar function of one array."""

    def gradient(f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
        x = np.array(x, dtype=np.float64)
        grad = np.zeros_like(x)
        for index in np.ndindex(x.shape):
            original = x[index]
            x[index] = original + eps
            upper = f(x)
            x[index] = original - eps
            lower = f(x)
            x[index] = original
            grad[index] = (upper - lower) / (2.0 * eps)
        return grad

    return gradient
