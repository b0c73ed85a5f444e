"""In-memory datasets of normalized point clouds."""

# Standard library imports
import logging
from dataclasses import dataclass, field
from typing import Optional

# Third party imports
import numpy as np

# Local imports
from pycloudgen.data.cloud_io import load_cloud
from pycloudgen.data.manifest import DatasetManifest
from pycloudgen.data.normalization import NormalizationRecord, normalize_unit_cube
from pycloudgen.data.sampling import sample_points
from pycloudgen.utils.exceptions import ManifestError, ShapeMismatchError

logger = logging.getLogger(__name__)


@dataclass
class CloudDataset:
    """Equal-size clouds normalized into [-1, 1]^3, with the records to undo it.

    Attributes:
        clouds (np.ndarray): [S, N, 3] normalized clouds.
        records (list[NormalizationRecord]): one per cloud.
        labels (list[str]): category of every cloud.
        paths (list[str]): source file of every cloud (empty strings for in-memory data).
    """

    clouds: np.ndarray
    records: list[NormalizationRecord]
    labels: list[str]
    paths: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.clouds.ndim != 3 or self.clouds.shape[2] != 3:
            raise ShapeMismatchError(f"'clouds' must have shape [S, N, 3], not {self.clouds.shape}")
        if not self.paths:
            self.paths = [""] * len(self.clouds)
        if not len(self.records) == len(self.labels) == len(self.paths) == len(self.clouds):
            raise ShapeMismatchError("clouds, records, labels and paths must have the same length")

    def __len__(self) -> int:
        return self.clouds.shape[0]

    @property
    def num_points(self) -> int:
        return self.clouds.shape[1]

    @classmethod
    def from_arrays(cls, clouds: list[np.ndarray], labels: Optional[list[str]] = None) -> "CloudDataset":
        """Normalizes raw clouds of equal size."""
        normalized, records = zip(*(normalize_unit_cube(np.asarray(cloud, dtype=np.float64)) for cloud in clouds))
        labels = list(labels) if labels is not None else ["unlabelled"] * len(clouds)
        return cls(np.stack(normalized), list(records), labels)

    @classmethod
    def from_manifest(cls, manifest: DatasetManifest, split: Optional[str], num_points: int, seed: int) -> "CloudDataset":
        """Loads, resamples to num_points and normalizes the clouds of one split.

        Args:
            manifest (DatasetManifest): the dataset.
            split (Optional[str]): 'train', 'test' or None for every entry.
            num_points (int): points per cloud after sampling.
            seed (int): base sampling seed; entry i uses seed + i.

        Returns:
            dataset (CloudDataset)

        Raises:
            ManifestError: if the split has no entries.

        """
        entries = manifest.entries if split is None else manifest.split(split)
        if not entries:
            raise ManifestError(f"manifest has no '{split}' entries")

        clouds, records = [], []
        for index, entry in enumerate(entries):
            raw = load_cloud(manifest.resolve(entry))
            normalized, record = normalize_unit_cube(sample_points(raw, num_points, seed + index))
            clouds.append(normalized)
            records.append(record)
        logger.info(f"loaded {len(entries)} clouds ({split or 'all'}) with {num_points} points each")
        return cls(np.stack(clouds), records, [entry.category for entry in entries], [entry.path for entry in entries])

    def subset(self, indices: np.ndarray) -> "CloudDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return CloudDataset(
            self.clouds[indices],
            [self.records[i] for i in indices],
            [self.labels[i] for i in indices],
            [self.paths[i] for i in indices],
        )

    def batches(self, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
        """Shuffled index batches covering every cloud once.

        The dataset is cut into max(1, S // batch_size) nearly equal chunks, so no chunk
        is a lone leftover cloud.
        """
        if batch_size < 1:
            raise ValueError(f"'batch_size' must be at least 1 (gave {batch_size})")
        order = rng.permutation(len(self))
        return np.array_split(order, max(1, len(self) // batch_size))
