# Standard library imports

# Third party imports
import numpy as np
import pytest

# Local imports
from pycloudgen.utils.exceptions import ShapeMismatchError
from pycloudgen.utils.rotations import gravity_axis_rotation, random_gravity_rotation, rotate_gravity_axis


def test_gravity_axis_rotation_with_validation_data():
    rotation = gravity_axis_rotation(np.pi / 2)
    np.testing.assert_allclose(rotation.apply([1.0, 0.0, 0.0]), [0.0, 0.0, -1.0], atol=1e-12)
    np.testing.assert_allclose(rotation.apply([0.0, 1.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)


def test_gravity_axis_rotation_bad_angle():
    with pytest.raises(TypeError):
        gravity_axis_rotation("90")


def test_rotate_gravity_axis_keeps_heights_and_radii(rng):
    cloud = rng.normal(size=(50, 3))
    rotated = rotate_gravity_axis(cloud, 1.234)
    np.testing.assert_allclose(rotated[:, 1], cloud[:, 1], atol=1e-12)
    np.testing.assert_allclose(np.hypot(rotated[:, 0], rotated[:, 2]), np.hypot(cloud[:, 0], cloud[:, 2]), atol=1e-12)
    np.testing.assert_allclose(rotate_gravity_axis(rotated, -1.234), cloud, atol=1e-12)


def test_rotate_gravity_axis_bad_cloud():
    with pytest.raises(TypeError):
        rotate_gravity_axis([[0.0, 0.0, 0.0]], 0.0)

    with pytest.raises(ShapeMismatchError):
        rotate_gravity_axis(np.zeros((4, 2)), 0.0)


def test_random_gravity_rotation_is_seeded(rng):
    cloud = rng.normal(size=(10, 3))
    first = random_gravity_rotation(cloud, np.random.default_rng(3))
    second = random_gravity_rotation(cloud, np.random.default_rng(3))
    np.testing.assert_array_equal(first, second)
