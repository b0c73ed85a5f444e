"""Latent-code tables for downstream classifiers."""

# Standard library imports
import logging
from pathlib import Path
from typing import Union

# Third party imports
import numpy as np
import pandas as pd

# Local imports
from pycloudgen.autodiff import no_grad
from pycloudgen.data.dataset import CloudDataset
from pycloudgen.networks.encoder import Encoder
from pycloudgen.utils.exceptions import ManifestError

logger = logging.getLogger(__name__)


def encode_dataset(encoder: Encoder, dataset: CloudDataset, batch_size: int = 32) -> np.ndarray:
    """Eval-mode latent codes [S, latent_dim] of every cloud, in dataset order."""
    if batch_size < 1:
        raise ValueError(f"'batch_size' must be at least 1 (gave {batch_size})")
    encoder.eval()
    codes = []
    with no_grad():
        for start in range(0, len(dataset), batch_size):
            codes.append(encoder(dataset.clouds[start : start + batch_size]).data.copy())
    return np.concatenate(codes, axis=0)


def export_latents(encoder: Encoder, dataset: CloudDataset, path: Union[str, Path]) -> pd.DataFrame:
    """Writes one `label<TAB>v1 v2 ... vD` line per cloud.

    The clouds are cube-normalized, not standardized to zero mean and unit variance;
    any global standardization is left to the classifier.

    Args:
        encoder (Encoder): trained encoder.
        dataset (CloudDataset): clouds to encode, with their labels.
        path (Union[str, Path]): output file.

    Returns:
        table (pd.DataFrame): columns `label` and `code` (space-joined values) as written.

    """
    codes = encode_dataset(encoder, dataset)
    if any("\t" in label or "\n" in label for label in dataset.labels):
        raise ManifestError("labels must not contain tabs or newlines")

    table = pd.DataFrame({"label": dataset.labels, "code": [" ".join(f"{value:.9g}" for value in row) for row in codes]})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, sep="\t", header=False, index=False, lineterminator="\n")
    logger.info(f"wrote {len(table)} latent codes of size {codes.shape[1]} to {path}")
    return table


def load_latents(path: Union[str, Path]) -> tuple[list[str], np.ndarray]:
    """Reads a latent table back into labels and an [S, D] matrix."""
    table = pd.read_csv(path, sep="\t", header=None, names=["label", "code"], dtype=str, keep_default_na=False)
    codes = np.array([np.array(code.split(), dtype=np.float64) for code in table["code"]])
    return table["label"].tolist(), codes
