# Standard library imports

# Third party imports
import numpy as np
import pytest

# Local imports
from pycloudgen.networks import Encoder
from pycloudgen.utils.exceptions import ShapeMismatchError


def test_encoder_with_validation_data(tiny_config, tiny_dataset):
    encoder = Encoder(tiny_config, np.random.default_rng(0))
    codes = encoder(tiny_dataset.clouds)
    assert codes.shape == (8, tiny_config.latent_dim)
    assert encoder.features(tiny_dataset.clouds).shape == (8, 2 * tiny_config.encoder_widths[-1])

    encoder.eval()
    assert encoder(tiny_dataset.clouds[0]).shape == (1, tiny_config.latent_dim)


@pytest.mark.parametrize("mode", ["train", "eval"])
def test_encoder_permutation_invariance(tiny_config, tiny_dataset, rng, mode):
    encoder = Encoder(tiny_config, np.random.default_rng(0)).set_mode(mode)
    expected = encoder(tiny_dataset.clouds).data
    for _ in range(20):
        shuffled = tiny_dataset.clouds[:, rng.permutation(tiny_config.num_points)]
        np.testing.assert_allclose(encoder(shuffled).data, expected, atol=1e-10)


def test_encoder_bad_points(tiny_config):
    with pytest.raises(ShapeMismatchError):
        Encoder(tiny_config)(np.zeros((2, 5, 2)))
