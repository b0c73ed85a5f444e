# Standard library imports

# Third party imports
import numpy as np
import pytest

# Local imports
from pycloudgen.data.cloud_io import save_cloud
from pycloudgen.data.dataset import CloudDataset
from pycloudgen.data.manifest import DatasetManifest, ManifestEntry, split_manifest
from pycloudgen.utils.exceptions import ManifestError, ShapeMismatchError


def test_from_arrays_with_validation_data(rng):
    raw = [rng.normal(loc=3.0, size=(16, 3)) * 4.0 for _ in range(3)]
    dataset = CloudDataset.from_arrays(raw, ["a", "b", "a"])

    assert len(dataset) == 3
    assert dataset.num_points == 16
    assert dataset.labels == ["a", "b", "a"]
    assert dataset.paths == ["", "", ""]
    for cloud, normalized, record in zip(raw, dataset.clouds, dataset.records):
        assert np.abs(normalized).max() == pytest.approx(1.0)
        np.testing.assert_allclose(normalized * record.scale + record.center, cloud, atol=1e-12)


def test_from_manifest_with_validation_data(tmp_path, rng):
    entries = []
    for i in range(8):
        save_cloud(tmp_path / "boxes" / f"{i}.xyz", rng.normal(size=(40 + i, 3)))
        entries.append((f"boxes/{i}.xyz", "box"))
    manifest = split_manifest(entries, seed=0)
    manifest.root = tmp_path

    train = CloudDataset.from_manifest(manifest, "train", num_points=32, seed=5)
    assert len(train) == 7
    assert train.clouds.shape == (7, 32, 3)
    assert train.paths == [entry.path for entry in manifest.split("train")]
    np.testing.assert_array_equal(train.clouds, CloudDataset.from_manifest(manifest, "train", num_points=32, seed=5).clouds)

    everything = CloudDataset.from_manifest(manifest, None, num_points=64, seed=5)
    assert len(everything) == 8


def test_from_manifest_empty_split(tmp_path):
    save_cloud(tmp_path / "a.xyz", np.eye(3))
    manifest = DatasetManifest([ManifestEntry("a.xyz", "box", "train")], root=tmp_path)
    with pytest.raises(ManifestError):
        CloudDataset.from_manifest(manifest, "test", num_points=4, seed=0)


def test_batches_with_validation_data(tiny_dataset):
    batches = tiny_dataset.batches(3, np.random.default_rng(0))
    # 8 clouds in chunks of about 3 give two chunks of four, never a lone leftover
    assert [len(batch) for batch in batches] == [4, 4]
    assert sorted(np.concatenate(batches).tolist()) == list(range(8))

    assert len(tiny_dataset.batches(100, np.random.default_rng(0))) == 1


def test_batches_bad_size(tiny_dataset):
    with pytest.raises(ValueError):
        tiny_dataset.batches(0, np.random.default_rng(0))


def test_subset(tiny_dataset):
    subset = tiny_dataset.subset(np.array([2, 0]))
    np.testing.assert_array_equal(subset.clouds, tiny_dataset.clouds[[2, 0]])
    assert subset.labels == [tiny_dataset.labels[2], tiny_dataset.labels[0]]


def test_cloud_dataset_bad_fields(tiny_dataset):
    with pytest.raises(ShapeMismatchError):
        CloudDataset(tiny_dataset.clouds[0], tiny_dataset.records[:1], tiny_dataset.labels[:1])

    with pytest.raises(ShapeMismatchError):
        CloudDataset(tiny_dataset.clouds, tiny_dataset.records, tiny_dataset.labels[:3])
