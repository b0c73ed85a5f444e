"""Reading and writing point clouds.

Two formats are supported, chosen by file extension:
    - `.xyz` text: one point per line, three floats separated by single spaces, no header.
    - `.pcd1` binary: magic b"PCD1", u32 little-endian point count, count x 3 f32 little-endian.
"""

# Standard library imports
import logging
import struct
from pathlib import Path
from typing import Union

# Third party imports
import numpy as np

# Local imports
from pycloudgen.utils.exceptions import CloudFormatError, ShapeMismatchError

logger = logging.getLogger(__name__)

BINARY_MAGIC = b"PCD1"
CLOUD_FORMATS = ["text", "binary"]


def cloud_format_for(path: Union[str, Path]) -> str:
    """'binary' for `.pcd1` files, 'text' for everything else."""
    return "binary" if Path(path).suffix.lower() == ".pcd1" else "text"


def _parse_text(raw: bytes, path: Path) -> np.ndarray:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as error:
        raise CloudFormatError(f"{path}: not UTF-8 text") from error

    rows = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise CloudFormatError(f"{path}:{number}: expected 3 values, got {len(parts)}")
        try:
            rows.append([float(part) for part in parts])
        except ValueError as error:
            raise CloudFormatError(f"{path}:{number}: malformed number in '{line.strip()}'") from error
    if not rows:
        raise CloudFormatError(f"{path}: no points")
    return np.array(rows, dtype=np.float32)


def _parse_binary(raw: bytes, path: Path) -> np.ndarray:
    if len(raw) < 8 or raw[:4] != BINARY_MAGIC:
        raise CloudFormatError(f"{path}: missing PCD1 header")
    (count,) = struct.unpack("<I", raw[4:8])
    if count == 0:
        raise CloudFormatError(f"{path}: no points")
    expected = 8 + count * 3 * 4
    if len(raw) != expected:
        raise CloudFormatError(f"{path}: header announces {count} points but payload has {len(raw) - 8} bytes")
    return np.frombuffer(raw, dtype="<f4", offset=8).reshape(count, 3).astype(np.float32)


def load_cloud(path: Union[str, Path]) -> np.ndarray:
    """Loads a point cloud.

    Args:
        path (Union[str, Path]): `.xyz` text or `.pcd1` binary file.

    Returns:
        cloud (np.ndarray): [N, 3] float64 holding f32-precision values.

    Raises:
        CloudFormatError: on a malformed line, an empty file, a count mismatch or a
            non-finite value.
        OSError: if the file cannot be read.

    """
    path = Path(path)
    raw = path.read_bytes()
    match cloud_format_for(path):
        case "binary":
            cloud = _parse_binary(raw, path)
        case "text":
            cloud = _parse_text(raw, path)
    if not np.all(np.isfinite(cloud)):
        raise CloudFormatError(f"{path}: non-finite coordinate")
    return cloud.astype(np.float64)


def encode_cloud(cloud: np.ndarray, cloud_format: str) -> bytes:
    """Serializes a cloud; coordinates are rounded to f32 first."""
    # Argument checking
    if cloud_format not in CLOUD_FORMATS:
        raise ValueError(f"'cloud_format' must be one of {CLOUD_FORMATS} (gave {cloud_format})")
    cloud = np.asarray(cloud)
    if cloud.ndim != 2 or cloud.shape[1] != 3 or cloud.shape[0] == 0:
        raise ShapeMismatchError(f"'cloud' must have shape [N, 3] with N >= 1, not {cloud.shape}")
    if not np.all(np.isfinite(cloud)):
        raise CloudFormatError("cannot write non-finite coordinates")

    single = cloud.astype("<f4")
    match cloud_format:
        case "binary":
            return BINARY_MAGIC + struct.pack("<I", single.shape[0]) + single.tobytes()
        case "text":
            # 9 significant digits identify every f32 exactly
            return "".join(f"{x:.9g} {y:.9g} {z:.9g}\n" for x, y, z in single.tolist()).encode("utf-8")


def save_cloud(path: Union[str, Path], cloud: np.ndarray) -> None:
    """Writes a point cloud in the format implied by the extension.

    Args:
        path (Union[str, Path]): destination, `.pcd1` for binary, anything else for text.
        cloud (np.ndarray): [N, 3] points.

    Returns:
        None

    """
    path = Path(path)
    payload = encode_cloud(cloud, cloud_format_for(path))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    logger.debug(f"wrote {len(cloud)} points to {path}")
