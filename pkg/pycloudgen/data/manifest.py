"""Dataset manifests: which cloud files exist, their category and their split.

On disk a manifest is UTF-8 text with one `path<TAB>category<TAB>train|test` line per cloud.
A leading `# seed=<int>` comment records the seed the split was drawn with.
"""

# Standard library imports
import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Union

# Third party imports
import numpy as np
import pandas as pd

# Local imports
from pycloudgen.utils.constants import train_fraction_percent
from pycloudgen.utils.exceptions import ManifestError

logger = logging.getLogger(__name__)

SPLITS = ["train", "test"]
MANIFEST_COLUMNS = ["path", "category", "split"]


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    category: str
    split: str = "train"


@dataclass
class DatasetManifest:
    """Entries of a dataset and the seed their split was drawn with.

    Attributes:
        entries (list[ManifestEntry]): one per cloud file.
        seed (Optional[int]): split seed, None when unknown.
        root (Optional[Path]): directory relative paths are resolved against.
    """

    entries: list[ManifestEntry]
    seed: Optional[int] = None
    root: Optional[Path] = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def split(self, name: str) -> list[ManifestEntry]:
        if name not in SPLITS:
            raise ValueError(f"'name' must be one of {SPLITS} (gave {name})")
        return [entry for entry in self.entries if entry.split == name]

    def categories(self) -> list[str]:
        return sorted({entry.category for entry in self.entries})

    def resolve(self, entry: ManifestEntry) -> Path:
        path = Path(entry.path)
        if path.is_absolute() or self.root is None:
            return path
        return self.root / path

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([[e.path, e.category, e.split] for e in self.entries], columns=MANIFEST_COLUMNS)


def train_count(n: int) -> int:
    """Training share of n items under the 85/15 rule, rounded up."""
    return (train_fraction_percent * n + 99) // 100


def split_manifest(entries: Iterable[Union[ManifestEntry, tuple[str, str]]], seed: int) -> DatasetManifest:
    """Splits entries 85/15 into train and test, independently for each category.

    Within each category the entries are shuffled with the seed and the first
    ceil(0.85 n) become training entries. Output order follows the input order.

    Args:
        entries (Iterable): ManifestEntry objects or (path, category) pairs.
        seed (int): shuffle seed.

    Returns:
        manifest (DatasetManifest)

    Raises:
        ManifestError: if there are no entries.

    """
    items = [entry if isinstance(entry, ManifestEntry) else ManifestEntry(str(entry[0]), str(entry[1])) for entry in entries]
    if not items:
        raise ManifestError("cannot split an empty list of entries")

    rng = np.random.default_rng(seed)
    split_of = {}
    for category in sorted({item.category for item in items}):
        indices = [i for i, item in enumerate(items) if item.category == category]
        order = rng.permutation(len(indices))
        n_train = train_count(len(indices))
        for rank, position in enumerate(order):
            split_of[indices[position]] = "train" if rank < n_train else "test"

    return DatasetManifest([replace(item, split=split_of[i]) for i, item in enumerate(items)], seed=seed)


def save_manifest(path: Union[str, Path], manifest: DatasetManifest) -> None:
    """Writes a manifest as tab-separated lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        if manifest.seed is not None:
            handle.write(f"# seed={manifest.seed}\n")
        manifest.to_frame().to_csv(handle, sep="\t", header=False, index=False, lineterminator="\n", quoting=csv.QUOTE_NONE)
    logger.info(f"wrote manifest with {len(manifest)} entries to {path}")


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """Reads a manifest written by `save_manifest` (or by hand).

    Raises:
        ManifestError: if the file is missing, empty or malformed.

    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")

    seed = None
    with open(path, encoding="utf-8") as handle:
        first = handle.readline().strip()
    if first.startswith("# seed="):
        try:
            seed = int(first.removeprefix("# seed="))
        except ValueError as error:
            raise ManifestError(f"{path}: malformed seed comment '{first}'") from error

    try:
        frame = pd.read_csv(
            path, sep="\t", header=None, names=MANIFEST_COLUMNS, comment="#", dtype=str, quoting=csv.QUOTE_NONE, keep_default_na=False
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise ManifestError(f"{path}: {error}") from error

    frame = frame.fillna("")
    if frame.empty:
        raise ManifestError(f"{path}: no entries")
    if (frame == "").any().any():
        raise ManifestError(f"{path}: every line needs path, category and split")
    bad = sorted(set(frame["split"]) - set(SPLITS))
    if bad:
        raise ManifestError(f"{path}: split must be one of {SPLITS} (gave {bad})")

    entries = [ManifestEntry(row.path, row.category, row.split) for row in frame.itertuples(index=False)]
    return DatasetManifest(entries, seed=seed, root=path.parent)
