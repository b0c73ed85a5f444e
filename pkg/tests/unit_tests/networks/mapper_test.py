# Standard library imports
from dataclasses import replace

# Third party imports
import numpy as np
import pytest

# Local imports
from pycloudgen.networks import Discriminator, Mapper
from pycloudgen.utils.exceptions import ShapeMismatchError


def test_mapper_with_validation_data(tiny_config, rng):
    mapper = Mapper(tiny_config, np.random.default_rng(0))
    assert len(mapper.denses) == tiny_config.mapper_layers
    assert mapper(rng.normal(size=(5, tiny_config.latent_dim))).shape == (5, tiny_config.latent_dim)

    mapper.eval()
    assert mapper(rng.normal(size=tiny_config.latent_dim)).shape == (1, tiny_config.latent_dim)


def test_mapper_bad_samples(tiny_config):
    with pytest.raises(ShapeMismatchError):
        Mapper(tiny_config)(np.zeros((2, 3)))


def test_discriminator_with_validation_data(tiny_config, tiny_dataset):
    critic = Discriminator(tiny_config, np.random.default_rng(0))
    scores = critic(tiny_dataset.clouds)
    assert scores.shape == (len(tiny_dataset),)
    assert not critic.bns

    normed = Discriminator(replace(tiny_config, disc_batch_norm=True))
    assert len(normed.bns) == len(tiny_config.disc_widths)
    assert normed(tiny_dataset.clouds).shape == (len(tiny_dataset),)


def test_discriminator_permutation_invariance(tiny_config, tiny_dataset, rng):
    critic = Discriminator(tiny_config, np.random.default_rng(0))
    expected = critic(tiny_dataset.clouds).data
    shuffled = tiny_dataset.clouds[:, rng.permutation(tiny_config.num_points)]
    np.testing.assert_allclose(critic(shuffled).data, expected, atol=1e-12)
