# Standard library imports
import math

# Third party imports
import numpy as np
import pytest

# Local imports
from pycloudgen.data.normalization import normalize_unit_cube
from pycloudgen.data.synthetic import synth_shape
from pycloudgen.utils.distances import chamfer, emd_hungarian
from pycloudgen.utils.exceptions import ShapeMismatchError
from pycloudgen.utils.generation_metrics import (
    CloudSet,
    MetricsReport,
    coverage,
    evaluate_generation,
    jensen_shannon_divergence,
    jsd,
    mmd,
    occupancy_histogram,
    one_nna,
    pairwise_distances,
)


def _random_set(rng, count, n, label, loc=0.0):
    return CloudSet(rng.uniform(-1.0, 1.0, size=(count, n, 3)) * 0.5 + loc, label)


def test_pairwise_distances_with_validation_data(rng):
    a = _random_set(rng, 4, 12, "a")
    b = _random_set(rng, 3, 12, "b")
    cd = pairwise_distances(a, b, "cd")
    assert cd.matrix.shape == (4, 3)
    for i in range(4):
        for j in range(3):
            assert cd.matrix[i, j] == pytest.approx(chamfer(a.clouds[i], b.clouds[j]))

    # the fill is independent of the number of workers
    np.testing.assert_array_equal(pairwise_distances(a, b, "cd", workers=3).matrix, cd.matrix)


def test_pairwise_distances_bad_base(rng):
    a = _random_set(rng, 2, 4, "a")
    with pytest.raises(ValueError):
        pairwise_distances(a, a, "l1")

    with pytest.raises(TypeError):
        pairwise_distances(a.clouds, a, "cd")


def test_mmd_and_coverage_with_validation_data(rng):
    ref = _random_set(rng, 6, 10, "ref")
    gen = _random_set(rng, 6, 10, "gen")
    matrix = np.array([[chamfer(r, g) for g in gen.clouds] for r in ref.clouds])

    assert mmd(ref, gen) == pytest.approx(np.mean([min(row) for row in matrix]))
    nearest_refs = {int(np.argmin(matrix[:, j])) for j in range(6)}
    assert coverage(ref, gen) == pytest.approx(len(nearest_refs) / 6)


def test_mmd_emd_with_validation_data(rng):
    ref = _random_set(rng, 3, 8, "ref")
    gen = _random_set(rng, 3, 8, "gen")
    exact = np.array([[emd_hungarian(r, g)[0] for g in gen.clouds] for r in ref.clouds])
    # auction costs sit within eps_min = 1/(8N) of the optimum
    assert mmd(ref, gen, "emd") == pytest.approx(exact.min(axis=1).mean(), abs=1.0 / 64)


def test_one_nna_with_validation_data(rng):
    ref = _random_set(rng, 4, 16, "ref")
    far = _random_set(rng, 4, 16, "gen", loc=5.0)
    assert one_nna(ref, far) == 1.0

    # identical sets: every cloud's nearest neighbour is its copy in the other set
    assert one_nna(ref, CloudSet(ref.clouds.copy(), "gen")) == 0.0


def test_one_nna_bad_sets(rng):
    with pytest.raises(ShapeMismatchError):
        one_nna(_random_set(rng, 3, 4, "ref"), _random_set(rng, 2, 4, "gen"))

    with pytest.raises(ValueError):
        one_nna(_random_set(rng, 1, 4, "ref"), _random_set(rng, 1, 4, "gen"))


def test_one_nna_symmetric_with_equidistant_neighbours():
    # the first reference cloud is as close to a generated cloud as to the other reference cloud
    ref = CloudSet(np.array([[[0.0, 0.0, 0.0]], [[1.0, 0.0, 0.0]]]), "ref")
    gen = CloudSet(np.array([[[-1.0, 0.0, 0.0]], [[5.0, 0.0, 0.0]]]), "gen")

    assert one_nna(ref, gen) == pytest.approx(0.375)
    assert one_nna(gen, ref) == one_nna(ref, gen)


def test_one_nna_symmetric_and_order_invariant(rng):
    ref = _random_set(rng, 5, 8, "ref")
    gen = _random_set(rng, 5, 8, "gen", loc=0.2)
    accuracy = one_nna(ref, gen)

    assert one_nna(gen, ref) == accuracy
    order = rng.permutation(5)
    assert one_nna(CloudSet(ref.clouds[order], "ref"), gen) == accuracy


def test_occupancy_histogram_with_validation_data():
    points = np.array([[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0], [0.1, 0.1, 0.1], [3.0, 0.0, 0.0]])
    counts, clamped = occupancy_histogram(points, 2)
    assert clamped == 1
    assert counts.sum() == 4
    assert counts[0] == 1
    # the clamped point lands in the same corner voxel as the two points at the upper face
    assert counts[np.ravel_multi_index((1, 1, 1), (2, 2, 2))] == 3


def test_jensen_shannon_divergence_with_validation_data():
    assert jensen_shannon_divergence(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(1.0)
    assert jensen_shannon_divergence(np.array([2.0, 2.0]), np.array([1.0, 1.0])) == pytest.approx(0.0, abs=1e-12)

    p = np.array([0.5, 0.5])
    q = np.array([0.25, 0.75])
    m = (p + q) / 2
    expected = 0.5 * sum(pi * math.log2(pi / mi) for pi, mi in zip(p, m)) + 0.5 * sum(qi * math.log2(qi / mi) for qi, mi in zip(q, m))
    assert jensen_shannon_divergence(p, q) == pytest.approx(expected)


def test_jensen_shannon_divergence_bad_histograms():
    with pytest.raises(ValueError):
        jensen_shannon_divergence(np.array([-1.0, 1.0]), np.array([1.0, 1.0]))

    with pytest.raises(ShapeMismatchError):
        jensen_shannon_divergence(np.ones(2), np.ones(3))


def test_jsd_bad_grid(rng):
    clouds = _random_set(rng, 2, 4, "ref")
    with pytest.raises(ValueError):
        jsd(clouds, clouds, grid_res=0)


def test_evaluate_generation_identical_sets(rng):
    ref = _random_set(rng, 4, 16, "ref")
    report = evaluate_generation(ref, CloudSet(ref.clouds.copy(), "gen"), grid_res=8)

    assert report.jsd == pytest.approx(0.0, abs=1e-12)
    assert report.mmd_cd == pytest.approx(0.0, abs=1e-12)
    assert report.cov_cd == 1.0
    assert report.cov_emd == 1.0
    assert report.nna_degenerate
    assert report.n_ref == report.n_gen == 4


def _brute_force_jsd(ref_clouds, gen_clouds, grid_res):
    def histogram(clouds):
        counts = {}
        for cloud in clouds:
            for point in cloud:
                cell = tuple(min(math.floor((c + 1.0) / 2.0 * grid_res), grid_res - 1) for c in point)
                counts[cell] = counts.get(cell, 0) + 1
        return counts

    p, q = histogram(ref_clouds), histogram(gen_clouds)
    p_total, q_total = sum(p.values()), sum(q.values())
    divergence = 0.0
    for cell in set(p) | set(q):
        pi, qi = p.get(cell, 0) / p_total, q.get(cell, 0) / q_total
        mi = (pi + qi) / 2.0
        divergence += 0.5 * (pi * math.log2(pi / mi) if pi else 0.0) + 0.5 * (qi * math.log2(qi / mi) if qi else 0.0)
    return divergence


def test_evaluate_generation_against_brute_force(rng):
    ref = _random_set(rng, 6, 16, "ref")
    gen = _random_set(rng, 6, 16, "gen", loc=0.3)
    report = evaluate_generation(ref, gen, grid_res=6)

    ref_clouds = [normalize_unit_cube(cloud)[0] for cloud in ref.clouds]
    gen_clouds = [normalize_unit_cube(cloud)[0] for cloud in gen.clouds]
    assert report.jsd == pytest.approx(_brute_force_jsd(ref_clouds, gen_clouds, 6), abs=1e-12)

    cross = np.array([[chamfer(r, g) for g in gen_clouds] for r in ref_clouds])
    assert report.mmd_cd == pytest.approx(cross.min(axis=1).mean())
    assert report.cov_cd == pytest.approx(len({int(np.argmin(cross[:, j])) for j in range(6)}) / 6)

    union = ref_clouds + gen_clouds
    correct = 0.0
    for i, cloud in enumerate(union):
        same = min(chamfer(cloud, other) for j, other in enumerate(union) if j != i and (j < 6) == (i < 6))
        different = min(chamfer(cloud, other) for j, other in enumerate(union) if (j < 6) != (i < 6))
        correct += 1.0 if same < different else (0.5 if same == different else 0.0)
    assert report.nna_cd == pytest.approx(correct / 12)


def test_jsd_orders_shape_families():
    def family_set(family, seeds, label):
        return CloudSet(np.stack([synth_shape(family, None, 512, seed) for seed in seeds]), label).normalized()

    spheres = family_set("sphere", range(4), "ref")
    more_spheres = family_set("sphere", range(10, 14), "gen")
    boxes = family_set("box", range(4), "gen")

    assert jsd(spheres, boxes, grid_res=8) > jsd(spheres, more_spheres, grid_res=8)


def test_evaluate_generation_bad_sets(rng):
    with pytest.raises(ShapeMismatchError):
        evaluate_generation(_random_set(rng, 3, 4, "ref"), _random_set(rng, 2, 4, "gen"))


def test_metrics_report_serialization():
    report = MetricsReport(
        jsd=0.0123, mmd_cd=0.00045, mmd_emd=0.0321, cov_cd=0.5, cov_emd=0.375, nna_cd=0.625, nna_emd=0.75,
        nna_degenerate=False, n_ref=8, n_gen=8,
    )
    lines = report.to_lines()
    assert "metric.cov_cd = 50.0" in lines

    parsed = MetricsReport.from_lines(lines)
    for name in MetricsReport.SCALES:
        assert getattr(parsed, name) == pytest.approx(getattr(report, name), rel=1e-12)
    assert parsed.nna_degenerate is False
    assert MetricsReport.from_json(report.to_json()) == report


def test_cloud_set_bad_clouds():
    with pytest.raises(ValueError):
        CloudSet([], "ref")

    with pytest.raises(ShapeMismatchError):
        CloudSet([np.zeros((3, 3)), np.zeros((4, 3))], "ref")

    with pytest.raises(ShapeMismatchError):
        CloudSet(np.zeros((2, 3, 2)), "ref")
