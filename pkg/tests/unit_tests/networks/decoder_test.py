# Standard library imports
from dataclasses import replace

# Third party imports
import numpy as np
import pytest

# Local imports
from pycloudgen.autodiff import Tensor
from pycloudgen.networks import Decoder
from pycloudgen.networks.layers.style import SELayer, adain
from pycloudgen.utils.exceptions import ShapeMismatchError


@pytest.mark.parametrize("variant", [{}, {"mlp_decoder": True}, {"se_off": True}, {"surface_input": True}])
def test_decoder_with_validation_data(tiny_config, rng, variant):
    decoder = Decoder(replace(tiny_config, **variant), np.random.default_rng(0))
    clouds = decoder(rng.normal(size=(3, tiny_config.latent_dim))).data
    assert clouds.shape == (3, tiny_config.num_points, 3)
    assert np.all(np.abs(clouds) < 1.0)


def test_decoder_constant_input(tiny_config):
    flat = Decoder(replace(tiny_config, surface_input=True), np.random.default_rng(0))
    assert np.all(flat.constant_input[:, 2] == 0.0)
    assert np.all(np.abs(flat.constant_input) <= 1.0)
    assert "decoder.constant_input" in flat.state_dict()
    with pytest.raises(ValueError):
        flat.constant_input[0, 0] = 5.0


def test_decoder_without_se_matches_open_gates(tiny_config, rng):
    styled = Decoder(tiny_config, np.random.default_rng(0)).eval()
    for block in styled.blocks:
        # sigmoid(1e3) rounds to exactly one, so every gate passes its channel unchanged
        block.se.fc2.weight.data = np.zeros_like(block.se.fc2.weight.data)
        block.se.fc2.bias.data = np.full_like(block.se.fc2.bias.data, 1e3)

    plain = Decoder(replace(tiny_config, se_off=True), np.random.default_rng(1)).eval()
    plain.load_state_dict(styled.state_dict())

    z = rng.normal(size=(4, tiny_config.latent_dim))
    np.testing.assert_allclose(plain(z).data, styled(z).data, atol=1e-12)


def test_decoder_bad_codes(tiny_config):
    with pytest.raises(ShapeMismatchError):
        Decoder(tiny_config)(np.zeros((2, tiny_config.latent_dim + 1)))


def test_adain_with_validation_data(rng):
    x = Tensor(rng.normal(loc=3.0, scale=2.0, size=(2, 4, 200)))
    ones, zeros = Tensor(np.ones((2, 4))), Tensor(np.zeros((2, 4)))
    styled = adain(x, ones, zeros).data
    assert np.all(np.abs(styled.mean(axis=2)) < 1e-4)
    assert np.all(np.abs(styled.std(axis=2) - 1.0) < 1e-3)

    y_s = rng.uniform(0.5, 2.0, size=(2, 4))
    y_b = rng.normal(size=(2, 4))
    shifted = adain(x, Tensor(y_s), Tensor(y_b)).data
    np.testing.assert_allclose(shifted.mean(axis=2), y_b, atol=1e-4)
    np.testing.assert_allclose(shifted.std(axis=2), y_s, rtol=1e-3)


def test_adain_bad_shapes():
    with pytest.raises(ShapeMismatchError):
        adain(Tensor(np.zeros((2, 4, 5))), Tensor(np.ones((2, 3))), Tensor(np.zeros((2, 4))))


def test_se_layer_with_validation_data(rng):
    layer = SELayer("se", 8, rng, reduction=4)
    x = Tensor(rng.normal(size=(3, 8, 10)))
    gates = layer.gates(x).data
    assert gates.shape == (3, 8)
    assert np.all((gates > 0.0) & (gates < 1.0))
    np.testing.assert_allclose(layer(x).data, x.data * gates[:, :, None])

    with pytest.raises(ValueError):
        SELayer("se", 6, rng, reduction=4)
