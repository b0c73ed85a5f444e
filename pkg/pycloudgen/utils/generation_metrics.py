"""Set-level evaluation of generated point clouds against a reference set:
JSD, MMD, COV and 1-NNA under Chamfer or EMD base distances."""

# Standard library imports
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

# Third party imports
import numpy as np
from scipy.stats import entropy
from tqdm.auto import tqdm

# Local imports
from pycloudgen.data.normalization import normalize_unit_cube
from pycloudgen.utils.constants import (
    cd_report_scale,
    emd_report_scale,
    jsd_grid_resolution,
    jsd_report_scale,
    percent_scale,
)
from pycloudgen.utils.distances import AuctionConfig, chamfer, emd_auction
from pycloudgen.utils.exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)

BASE_DISTANCES = ["cd", "emd"]


@dataclass
class CloudSet:
    """A labelled set of equal-size clouds stored as one [S, N, 3] array."""

    clouds: np.ndarray
    label: str = "reference"

    def __post_init__(self) -> None:
        if isinstance(self.clouds, (list, tuple)):
            if len(self.clouds) == 0:
                raise ValueError("a CloudSet needs at least one cloud")
            if len({np.shape(cloud) for cloud in self.clouds}) != 1:
                raise ShapeMismatchError("all clouds of a CloudSet must have the same number of points")
            self.clouds = np.stack(self.clouds)
        if not isinstance(self.clouds, np.ndarray):
            raise TypeError(f"arg 'clouds' must be of type np.ndarray or list, not {type(self.clouds)}")
        if self.clouds.ndim != 3 or self.clouds.shape[2] != 3:
            raise ShapeMismatchError(f"'clouds' must have shape [S, N, 3], not {self.clouds.shape}")
        if self.clouds.shape[0] == 0:
            raise ValueError("a CloudSet needs at least one cloud")
        self.clouds = self.clouds.astype(np.float64, copy=False)

    def __len__(self) -> int:
        return self.clouds.shape[0]

    def normalized(self) -> "CloudSet":
        """Copy with every cloud independently mapped into [-1, 1]^3."""
        return CloudSet(np.stack([normalize_unit_cube(cloud)[0] for cloud in self.clouds]), self.label)


@dataclass
class PairwiseDistances:
    """|A| x |B| matrix of base distances between the clouds of two sets."""

    matrix: np.ndarray
    base: str


def _base_distance(base: str, cfg: Optional[AuctionConfig]):
    match base:
        case "cd":
            return chamfer
        case "emd":
            return lambda x, y: emd_auction(x, y, cfg)[0]


def pairwise_distances(
    a: CloudSet,
    b: CloudSet,
    base: str,
    cfg: Optional[AuctionConfig] = None,
    workers: int = 1,
    progress: bool = False,
) -> PairwiseDistances:
    """Fills the distance matrix between two cloud sets.

    Rows are independent and may be filled by several worker threads; the result does not
    depend on fill order.

    Args:
        a (CloudSet): row set.
        b (CloudSet): column set.
        base (str): 'cd' or 'emd'.
        cfg (Optional[AuctionConfig]): auction parameters for 'emd'.
        workers (int): number of threads. Defaults to 1.
        progress (bool): show a progress bar. Defaults to False.

    Returns:
        distances (PairwiseDistances)

    """
    # Argument checking
    if not isinstance(a, CloudSet):
        raise TypeError(f"arg 'a' must be of type CloudSet, not {type(a)}")
    if not isinstance(b, CloudSet):
        raise TypeError(f"arg 'b' must be of type CloudSet, not {type(b)}")
    if base not in BASE_DISTANCES:
        raise ValueError(f"'base' must be one of {BASE_DISTANCES} (gave {base})")

    distance = _base_distance(base, cfg)

    def fill_row(i: int) -> np.ndarray:
        return np.array([distance(a.clouds[i], cloud) for cloud in b.clouds])

    rows = range(len(a))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(tqdm(pool.map(fill_row, rows), total=len(a), desc=f"{base.upper()} {a.label}x{b.label}", disable=not progress))
    return PairwiseDistances(matrix=np.vstack(results), base=base)


def occupancy_histogram(clouds: np.ndarray, grid_res: int) -> tuple[np.ndarray, int]:
    """Counts all points of a set of clouds in a grid_res^3 voxel grid over [-1, 1]^3.

    Args:
        clouds (np.ndarray): [S, N, 3] (or [N, 3]).
        grid_res (int): voxels per axis.

    Returns:
        counts (np.ndarray): flat histogram of length grid_res^3.
        clamped (int): number of points that lay outside the cube and were clamped.

    """
    points = np.asarray(clouds, dtype=np.float64).reshape(-1, 3)
    clamped = int(np.any(np.abs(points) > 1.0, axis=1).sum())
    cells = np.floor((np.clip(points, -1.0, 1.0) + 1.0) / 2.0 * grid_res).astype(np.int64)
    cells = np.minimum(cells, grid_res - 1)
    flat = np.ravel_multi_index(cells.T, (grid_res, grid_res, grid_res))
    return np.bincount(flat, minlength=grid_res**3).astype(np.float64), clamped


def jensen_shannon_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """Base-2 Jensen-Shannon divergence between two (unnormalized) histograms."""
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("histograms must be non-negative")
    if len(p) != len(q):
        raise ShapeMismatchError("histograms must have the same length")

    p_ = p / np.sum(p)
    q_ = q / np.sum(q)
    value = entropy((p_ + q_) / 2.0, base=2) - (entropy(p_, base=2) + entropy(q_, base=2)) / 2.0
    return float(min(max(value, 0.0), 1.0))


def jsd(ref: CloudSet, gen: CloudSet, grid_res: int = jsd_grid_resolution) -> float:
    """JSD between the marginal point distributions of two cloud sets.

    All points of each set are pooled into one occupancy histogram.

    Args:
        ref (CloudSet): reference set, normalized into [-1, 1]^3.
        gen (CloudSet): generated set, normalized into [-1, 1]^3.
        grid_res (int): voxels per axis. Defaults to 28.

    Returns:
        divergence (float): in [0, 1].

    """
    # Argument checking
    if not isinstance(ref, CloudSet):
        raise TypeError(f"arg 'ref' must be of type CloudSet, not {type(ref)}")
    if not isinstance(gen, CloudSet):
        raise TypeError(f"arg 'gen' must be of type CloudSet, not {type(gen)}")
    if not isinstance(grid_res, int) or grid_res < 1:
        raise ValueError(f"'grid_res' must be a positive int (gave {grid_res})")

    ref_counts, ref_clamped = occupancy_histogram(ref.clouds, grid_res)
    gen_counts, gen_clamped = occupancy_histogram(gen.clouds, grid_res)
    if ref_clamped or gen_clamped:
        logger.warning(f"JSD clamped {ref_clamped} reference and {gen_clamped} generated points outside [-1, 1]^3")
    return jensen_shannon_divergence(ref_counts, gen_counts)


def _resolve(matrix: Optional[Union[PairwiseDistances, np.ndarray]], ref: CloudSet, gen: CloudSet, base: str) -> np.ndarray:
    if matrix is None:
        return pairwise_distances(ref, gen, base).matrix
    if isinstance(matrix, PairwiseDistances):
        if matrix.base != base:
            raise ValueError(f"precomputed distances use base '{matrix.base}', expected '{base}'")
        matrix = matrix.matrix
    if matrix.shape != (len(ref), len(gen)):
        raise ShapeMismatchError(f"precomputed distances have shape {matrix.shape}, expected {(len(ref), len(gen))}")
    return matrix


def mmd(ref: CloudSet, gen: CloudSet, base: str = "cd", ref_gen: Optional[PairwiseDistances] = None) -> float:
    """Minimum matching distance: mean over reference clouds of the closest generated cloud.

    Args:
        ref (CloudSet): reference set.
        gen (CloudSet): generated set.
        base (str): 'cd' or 'emd'. Defaults to 'cd'.
        ref_gen (Optional[PairwiseDistances]): precomputed ref x gen distances.

    Returns:
        mmd (float)

    """
    matrix = _resolve(ref_gen, ref, gen, base)
    return float(matrix.min(axis=1).mean())


def coverage(ref: CloudSet, gen: CloudSet, base: str = "cd", ref_gen: Optional[PairwiseDistances] = None) -> float:
    """Fraction of reference clouds that are the nearest reference of some generated cloud.

    Args:
        ref (CloudSet): reference set.
        gen (CloudSet): generated set.
        base (str): 'cd' or 'emd'. Defaults to 'cd'.
        ref_gen (Optional[PairwiseDistances]): precomputed ref x gen distances.

    Returns:
        coverage (float): in [0, 1].

    """
    matrix = _resolve(ref_gen, ref, gen, base)
    matched = np.unique(matrix.argmin(axis=0))
    return float(len(matched) / len(ref))


def _union_matrix(ref_ref: np.ndarray, ref_gen: np.ndarray, gen_gen: np.ndarray) -> np.ndarray:
    union = np.block([[ref_ref, ref_gen], [ref_gen.T, gen_gen]]).astype(np.float64)
    np.fill_diagonal(union, np.inf)
    return union


def one_nna(
    ref: CloudSet,
    gen: CloudSet,
    base: str = "cd",
    ref_ref: Optional[PairwiseDistances] = None,
    ref_gen: Optional[PairwiseDistances] = None,
    gen_gen: Optional[PairwiseDistances] = None,
) -> float:
    """Leave-one-out 1-nearest-neighbour two-sample accuracy over ref and gen together.

    Every cloud is classified by the label of its closest other cloud; 0.5 means the sets
    are indistinguishable.

    Args:
        ref (CloudSet): reference set.
        gen (CloudSet): generated set, same size as ref (at least 2).
        base (str): 'cd' or 'emd'. Defaults to 'cd'.
        ref_ref, ref_gen, gen_gen (Optional[PairwiseDistances]): precomputed blocks.

    Returns:
        accuracy (float): in [0, 1].

    Raises:
        ShapeMismatchError: if the sets differ in size.
        ValueError: if the sets have fewer than two clouds.

    """
    # Argument checking
    if len(ref) != len(gen):
        raise ShapeMismatchError(f"1-NNA needs equal set sizes ({len(ref)} != {len(gen)})")
    if len(ref) < 2:
        raise ValueError("1-NNA needs at least two clouds per set")

    union = _union_matrix(
        _resolve(ref_ref, ref, ref, base),
        _resolve(ref_gen, ref, gen, base),
        _resolve(gen_gen, gen, gen, base),
    )
    labels = np.concatenate([np.zeros(len(ref), dtype=bool), np.ones(len(gen), dtype=bool)])
    same_set = labels[:, None] == labels[None, :]
    nearest_same = np.where(same_set, union, np.inf).min(axis=1)
    nearest_other = np.where(same_set, np.inf, union).min(axis=1)
    # an equidistant same-set and other-set neighbour scores half
    correct = np.where(nearest_same < nearest_other, 1.0, np.where(nearest_same == nearest_other, 0.5, 0.0))
    return float(correct.mean())


@dataclass
class MetricsReport:
    """Raw (unscaled) generation metrics. Rendering applies the reporting scales:
    JSD x1e2, MMD-CD x1e4, MMD-EMD x1e2, COV and 1-NNA in percent."""

    jsd: float
    mmd_cd: float
    mmd_emd: float
    cov_cd: float
    cov_emd: float
    nna_cd: float
    nna_emd: float
    nna_degenerate: bool
    n_ref: int
    n_gen: int

    SCALES = {
        "jsd": jsd_report_scale,
        "mmd_cd": cd_report_scale,
        "mmd_emd": emd_report_scale,
        "cov_cd": percent_scale,
        "cov_emd": percent_scale,
        "nna_cd": percent_scale,
        "nna_emd": percent_scale,
    }

    def to_lines(self) -> str:
        """`metric.name = value` lines with the reporting scales applied."""
        lines = ["# scales: jsd x1e2, mmd_cd x1e4, mmd_emd x1e2, cov/nna in percent"]
        for name, scale in self.SCALES.items():
            lines.append(f"metric.{name} = {getattr(self, name) * scale!r}")
        lines.append(f"metric.nna_degenerate = {str(self.nna_degenerate).lower()}")
        lines.append(f"metric.n_ref = {self.n_ref}")
        lines.append(f"metric.n_gen = {self.n_gen}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        return cls(**json.loads(text))

    @classmethod
    def from_lines(cls, text: str) -> "MetricsReport":
        values = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            values[key.strip().removeprefix("metric.")] = value.strip()
        fields = {name: float(values[name]) / scale for name, scale in cls.SCALES.items()}
        return cls(
            **fields,
            nna_degenerate=values["nna_degenerate"] == "true",
            n_ref=int(values["n_ref"]),
            n_gen=int(values["n_gen"]),
        )


def evaluate_generation(
    ref: CloudSet,
    gen: CloudSet,
    grid_res: int = jsd_grid_resolution,
    cfg: Optional[AuctionConfig] = None,
    workers: int = 1,
    progress: bool = False,
) -> MetricsReport:
    """Normalizes both sets cloud by cloud and computes every generation metric.

    Distance matrices are computed once per base distance and shared by MMD, COV and 1-NNA.

    Args:
        ref (CloudSet): reference set.
        gen (CloudSet): generated set of the same size.
        grid_res (int): JSD voxels per axis. Defaults to 28.
        cfg (Optional[AuctionConfig]): auction parameters for the EMD base.
        workers (int): threads for the distance fill. Defaults to 1.
        progress (bool): show progress bars. Defaults to False.

    Returns:
        report (MetricsReport)

    """
    # Argument checking
    if not isinstance(ref, CloudSet):
        raise TypeError(f"arg 'ref' must be of type CloudSet, not {type(ref)}")
    if not isinstance(gen, CloudSet):
        raise TypeError(f"arg 'gen' must be of type CloudSet, not {type(gen)}")
    if len(ref) != len(gen):
        raise ShapeMismatchError(f"reference and generated sets must have equal size ({len(ref)} != {len(gen)})")

    ref = ref.normalized()
    gen = gen.normalized()
    results = {"jsd": jsd(ref, gen, grid_res)}
    degenerate = False

    for base in BASE_DISTANCES:
        ref_ref = pairwise_distances(ref, ref, base, cfg, workers, progress)
        ref_gen = pairwise_distances(ref, gen, base, cfg, workers, progress)
        gen_gen = pairwise_distances(gen, gen, base, cfg, workers, progress)
        results[f"mmd_{base}"] = mmd(ref, gen, base, ref_gen)
        results[f"cov_{base}"] = coverage(ref, gen, base, ref_gen)
        if len(ref) >= 2:
            results[f"nna_{base}"] = one_nna(ref, gen, base, ref_ref, ref_gen, gen_gen)
        else:
            results[f"nna_{base}"] = float("nan")
        # a generated cloud identical to a reference cloud makes the two-sample test meaningless
        degenerate = degenerate or bool(np.any(ref_gen.matrix.min(axis=1) == 0.0))

    if degenerate:
        logger.warning("1-NNA is degenerate: some generated clouds coincide with reference clouds")
    return MetricsReport(**results, nna_degenerate=degenerate, n_ref=len(ref), n_gen=len(gen))


def cloud_set(clouds: Sequence[np.ndarray], label: str) -> CloudSet:
    """Convenience constructor from a list of [N, 3] arrays."""
    return CloudSet(list(clouds), label)
