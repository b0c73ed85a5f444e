# Standard library imports

# Third party imports
import numpy as np
import pytest
from scipy.stats import chisquare

# Local imports
from pycloudgen.data.synthetic import FAMILIES, ellipsoid_area, get_family, synth_shape


def test_synth_shape_sphere_with_validation_data():
    cloud = synth_shape("sphere", {"radius": 0.75}, 500, seed=1)
    assert cloud.shape == (500, 3)
    np.testing.assert_allclose(np.linalg.norm(cloud, axis=1), 0.75)


def test_synth_shape_box_faces():
    extents = np.array([0.4, 0.8, 0.6])
    cloud = synth_shape("box", {"extent_x": 0.4, "extent_y": 0.8, "extent_z": 0.6}, 3000, seed=2)
    on_face = np.abs(cloud) == extents
    # every point lies on exactly one face and inside the box
    assert np.all(on_face.sum(axis=1) == 1)
    assert np.all(np.abs(cloud) <= extents + 1e-12)

    axis = np.argmax(on_face, axis=1)
    face = axis * 2 + (cloud[np.arange(len(cloud)), axis] > 0)
    observed = np.bincount(face, minlength=6)
    areas = np.repeat([extents[1] * extents[2], extents[0] * extents[2], extents[0] * extents[1]], 2)
    assert chisquare(observed, areas / areas.sum() * len(cloud)).pvalue > 1e-3


def test_synth_shape_cylinder_surface():
    cloud = synth_shape("cylinder", {"radius": 0.5, "half_height": 0.9}, 2000, seed=3)
    radius = np.hypot(cloud[:, 0], cloud[:, 2])
    on_cap = np.abs(cloud[:, 1]) == 0.9
    on_side = ~on_cap
    np.testing.assert_allclose(radius[on_side], 0.5)
    assert np.all(radius[on_cap] <= 0.5 + 1e-12)

    lateral, caps = 2.0 * np.pi * 0.5 * 1.8, 2.0 * np.pi * 0.25
    assert chisquare([on_side.sum(), len(cloud) - on_side.sum()], np.array([lateral, caps]) / (lateral + caps) * len(cloud)).pvalue > 1e-3


def test_synth_shape_toy_plane_surface():
    params = {"body_length": 0.9, "body_radius": 0.15, "wing_span": 0.8, "wing_chord": 0.2, "wing_thickness": 0.05}
    cloud = synth_shape("toy_plane", params, 1000, seed=4)
    body = np.sum((cloud / [0.9, 0.15, 0.15]) ** 2, axis=1)
    wing = np.sum((cloud / [0.2, 0.05, 0.8]) ** 2, axis=1)
    # on one of the two surfaces and not buried in the other solid
    assert np.all(np.isclose(body, 1.0) | np.isclose(wing, 1.0))
    assert np.all(np.minimum(body, wing) >= 1.0 - 1e-9)
    assert np.all(np.abs(cloud) <= 1.0)


def test_ellipsoid_area_with_validation_data():
    assert ellipsoid_area(np.array([0.5, 0.5, 0.5])) == pytest.approx(np.pi)
    # prolate spheroid with a = b = 1, c = 2
    e = np.sqrt(1.0 - 1.0 / 4.0)
    assert ellipsoid_area(np.array([1.0, 1.0, 2.0])) == pytest.approx(2.0 * np.pi * (1.0 + 2.0 * np.arcsin(e) / e))


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_synth_shape_random_params(family):
    first = synth_shape(family, None, 64, seed=9, jitter=0.01)
    assert first.shape == (64, 3)
    np.testing.assert_array_equal(first, synth_shape(family, None, 64, seed=9, jitter=0.01))
    assert np.all(np.isfinite(first))


def test_synth_shape_bad_arguments():
    with pytest.raises(ValueError):
        synth_shape("torus", None, 10, seed=0)

    with pytest.raises(ValueError):
        synth_shape("sphere", {"radius": 2.0}, 10, seed=0)

    with pytest.raises(ValueError):
        synth_shape("sphere", {"radius": 0.7, "height": 1.0}, 10, seed=0)

    with pytest.raises(ValueError):
        synth_shape("sphere", None, 0, seed=0)

    with pytest.raises(ValueError):
        synth_shape("sphere", None, 10, seed=0, jitter=-0.1)

    with pytest.raises(ValueError):
        get_family("cone")
