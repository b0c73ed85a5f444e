# Standard library imports

# Third party imports
import numpy as np
import pytest

# Local imports
from pycloudgen.data.dataset import CloudDataset
from pycloudgen.data.latents import encode_dataset, export_latents, load_latents
from pycloudgen.networks.encoder import Encoder
from pycloudgen.utils.exceptions import ManifestError


def test_export_latents_with_validation_data(tmp_path, tiny_config, tiny_dataset):
    encoder = Encoder(tiny_config, np.random.default_rng(0))
    table = export_latents(encoder, tiny_dataset, tmp_path / "codes" / "latents.tsv")
    assert list(table.columns) == ["label", "code"]

    lines = (tmp_path / "codes" / "latents.tsv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == len(tiny_dataset)
    label, code = lines[0].split("\t")
    assert label == tiny_dataset.labels[0]
    assert len(code.split(" ")) == tiny_config.latent_dim

    labels, codes = load_latents(tmp_path / "codes" / "latents.tsv")
    assert labels == tiny_dataset.labels
    np.testing.assert_allclose(codes, encode_dataset(encoder, tiny_dataset), rtol=1e-8)


def test_encode_dataset_is_batch_independent(tiny_config, tiny_dataset):
    encoder = Encoder(tiny_config, np.random.default_rng(0))
    np.testing.assert_allclose(encode_dataset(encoder, tiny_dataset, 3), encode_dataset(encoder, tiny_dataset, 8), atol=1e-12)

    with pytest.raises(ValueError):
        encode_dataset(encoder, tiny_dataset, 0)


def test_export_latents_bad_labels(tmp_path, tiny_config, tiny_dataset):
    dataset = CloudDataset(tiny_dataset.clouds, tiny_dataset.records, ["a\tb"] + tiny_dataset.labels[1:])
    with pytest.raises(ManifestError):
        export_latents(Encoder(tiny_config, np.random.default_rng(0)), dataset, tmp_path / "latents.tsv")
