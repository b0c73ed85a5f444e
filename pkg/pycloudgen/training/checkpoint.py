"""Binary checkpoints of both training stages.

Layout (all integers little-endian):

    "STNC" | u16 version | u8 stage | u32 tensor count | tensors
           | u32 optimizer count | optimizer blocks | u32 config length | UTF-8 config

A tensor is `u16 name length | name | u8 rank | u32 dims... | f32 data`. An optimizer
block is `u16 label length | label | u32 step | u32 tensor count | tensors`, its
tensors named `m.<param>` and `v.<param>`. The epoch and the seed travel as tensors
named `meta.epoch` and `meta.seed`.
"""

# Standard library imports
import io
import logging
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Optional, Union

# Third party imports
import numpy as np

# Local imports
from pycloudgen.networks.network import Network
from pycloudgen.training.optimizers import AdamState
from pycloudgen.utils.config import RunConfig
from pycloudgen.utils.exceptions import CheckpointCorruptError, CheckpointError, CheckpointStageError, CheckpointVersionError

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"STNC"
CHECKPOINT_VERSION = 1
STAGES = {"ae": 1, "gan": 2}
META_EPOCH = "meta.epoch"
META_SEED = "meta.seed"
# seeds are split into 16-bit limbs so f32 storage stays exact
_SEED_LIMBS = 4


@dataclass
class OptimizerSnapshot:
    step: int
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_state(cls, state: AdamState) -> "OptimizerSnapshot":
        return cls(
            step=state.step,
            m={name: _as_f32(value) for name, value in state.m.items()},
            v={name: _as_f32(value) for name, value in state.v.items()},
        )

    def restore(self, state: AdamState) -> AdamState:
        """Copies step and moments into `state`, keeping its learning rate and betas."""
        state.step = self.step
        state.m = {name: value.copy() for name, value in self.m.items()}
        state.v = {name: value.copy() for name, value in self.v.items()}
        return state


@dataclass
class Checkpoint:
    """Everything needed to resume or use a training stage.

    Attributes:
        stage (str): 'ae' or 'gan'.
        tensors (dict[str, np.ndarray]): network parameters and buffers keyed by full name.
        optimizers (dict[str, OptimizerSnapshot]): Adam states keyed by label.
        config_text (str): the resolved run configuration.
        epoch (int): number of completed epochs.
        seed (int): run seed.
    """

    stage: str
    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    optimizers: dict[str, OptimizerSnapshot] = field(default_factory=dict)
    config_text: str = ""
    epoch: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.stage not in STAGES:
            raise ValueError(f"'stage' must be one of {list(STAGES)} (gave {self.stage})")

    @property
    def config(self) -> RunConfig:
        return RunConfig.from_text(self.config_text)

    def network_state(self, prefix: str) -> dict[str, np.ndarray]:
        """Tensors belonging to the network named `prefix`."""
        return {name: value for name, value in self.tensors.items() if name.startswith(f"{prefix}.")}

    def has_network(self, prefix: str) -> bool:
        return bool(self.network_state(prefix))

    def load_into(self, network: Network, strict: bool = True) -> Network:
        """Loads this checkpoint's tensors for `network` (matched by its name)."""
        state = self.network_state(network.name)
        if not state:
            raise CheckpointError(f"checkpoint of stage '{self.stage}' holds no '{network.name}' tensors")
        network.load_state_dict(state, strict=strict)
        return network

    def require_stage(self, stage: str) -> "Checkpoint":
        if self.stage != stage:
            raise CheckpointStageError(f"expected a '{stage}' checkpoint, got a '{self.stage}' one")
        return self


def _as_f32(value: np.ndarray) -> np.ndarray:
    return np.asarray(value, dtype=np.float64).astype("<f4")


def snapshot_networks(networks: list[Network]) -> dict[str, np.ndarray]:
    """Rounds every live parameter and buffer to f32 and returns the rounded values.

    Rounding the live networks as well makes a reloaded model compute exactly what the
    saved one computes from now on.
    """
    tensors: dict[str, np.ndarray] = {}
    for network in networks:
        for name, value in network.state_dict().items():
            if name in tensors:
                raise CheckpointError(f"tensor '{name}' is owned by two networks")
            tensors[name] = _as_f32(value)
        network.load_state_dict({name: tensors[name].astype(np.float64) for name in network.state_dict()})
    return tensors


def build_checkpoint(
    stage: str,
    networks: list[Network],
    optimizers: dict[str, AdamState],
    config: RunConfig,
    epoch: int,
    seed: int,
) -> Checkpoint:
    for state in optimizers.values():
        for moments in (state.m, state.v):
            for name in list(moments):
                moments[name] = _as_f32(moments[name]).astype(np.float64)
    return Checkpoint(
        stage=stage,
        tensors=snapshot_networks(networks),
        optimizers={label: OptimizerSnapshot.from_state(state) for label, state in optimizers.items()},
        config_text=config.to_text(),
        epoch=epoch,
        seed=seed,
    )


def _seed_to_limbs(seed: int) -> np.ndarray:
    if not 0 <= seed < 2 ** (16 * _SEED_LIMBS):
        raise CheckpointError(f"seed {seed} cannot be stored; it must lie in [0, 2^64)")
    return np.array([(seed >> (16 * i)) & 0xFFFF for i in range(_SEED_LIMBS)], dtype="<f4")


def _limbs_to_seed(limbs: np.ndarray) -> int:
    return sum(int(limb) << (16 * i) for i, limb in enumerate(limbs.reshape(-1)))


def _write_name(stream: BinaryIO, name: str) -> None:
    encoded = name.encode("utf-8")
    if len(encoded) > 0xFFFF:
        raise CheckpointError(f"name too long to store: {name[:40]}...")
    stream.write(struct.pack("<H", len(encoded)))
    stream.write(encoded)


def _write_tensor(stream: BinaryIO, name: str, value: np.ndarray) -> None:
    value = np.ascontiguousarray(_as_f32(value))
    _write_name(stream, name)
    stream.write(struct.pack("<B", value.ndim))
    stream.write(struct.pack(f"<{value.ndim}I", *value.shape))
    stream.write(value.tobytes())


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    """Serializes a checkpoint to bytes."""
    tensors = dict(checkpoint.tensors)
    tensors[META_EPOCH] = np.array(checkpoint.epoch, dtype="<f4")
    tensors[META_SEED] = _seed_to_limbs(checkpoint.seed)

    stream = io.BytesIO()
    stream.write(CHECKPOINT_MAGIC)
    stream.write(struct.pack("<HBI", CHECKPOINT_VERSION, STAGES[checkpoint.stage], len(tensors)))
    for name, value in tensors.items():
        _write_tensor(stream, name, value)

    stream.write(struct.pack("<I", len(checkpoint.optimizers)))
    for label, snapshot in checkpoint.optimizers.items():
        _write_name(stream, label)
        moments = {f"m.{name}": value for name, value in snapshot.m.items()}
        moments.update({f"v.{name}": value for name, value in snapshot.v.items()})
        stream.write(struct.pack("<II", snapshot.step, len(moments)))
        for name, value in moments.items():
            _write_tensor(stream, name, value)

    config = checkpoint.config_text.encode("utf-8")
    stream.write(struct.pack("<I", len(config)))
    stream.write(config)
    return stream.getvalue()


class _Reader:
    """Bounds-checked cursor over checkpoint bytes."""

    def __init__(self, raw: bytes, source: str):
        self.raw = raw
        self.source = source
        self.offset = 0

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.raw):
            raise CheckpointCorruptError(f"{self.source}: truncated at byte {self.offset} (needed {count} more)")
        chunk = self.raw[self.offset : self.offset + count]
        self.offset += count
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def name(self) -> str:
        (length,) = self.unpack("<H")
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError as error:
            raise CheckpointCorruptError(f"{self.source}: undecodable name at byte {self.offset}") from error

    def tensor(self) -> tuple[str, np.ndarray]:
        name = self.name()
        (rank,) = self.unpack("<B")
        shape = self.unpack(f"<{rank}I") if rank else ()
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(self.take(4 * count), dtype="<f4").reshape(shape).copy()
        return name, data


def decode_checkpoint(raw: bytes, source: str = "<bytes>") -> Checkpoint:
    """Parses checkpoint bytes.

    Raises:
        CheckpointCorruptError: on a wrong magic, truncation, or trailing bytes.
        CheckpointVersionError: on an unsupported format version.

    """
    reader = _Reader(raw, source)
    if reader.take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise CheckpointCorruptError(f"{source}: not a checkpoint (bad magic)")
    version, stage_tag, count = reader.unpack("<HBI")
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(f"{source}: format version {version} is not supported (expected {CHECKPOINT_VERSION})")
    stages = {tag: stage for stage, tag in STAGES.items()}
    if stage_tag not in stages:
        raise CheckpointCorruptError(f"{source}: unknown stage tag {stage_tag}")

    tensors = dict(reader.tensor() for _ in range(count))
    if META_EPOCH not in tensors or META_SEED not in tensors:
        raise CheckpointCorruptError(f"{source}: epoch or seed record missing")
    epoch = int(tensors.pop(META_EPOCH))
    seed = _limbs_to_seed(tensors.pop(META_SEED))

    optimizers = {}
    (optimizer_count,) = reader.unpack("<I")
    for _ in range(optimizer_count):
        label = reader.name()
        step, moment_count = reader.unpack("<II")
        snapshot = OptimizerSnapshot(step=step)
        for _ in range(moment_count):
            name, value = reader.tensor()
            kind, _, param = name.partition(".")
            match kind:
                case "m":
                    snapshot.m[param] = value.astype(np.float64)
                case "v":
                    snapshot.v[param] = value.astype(np.float64)
                case _:
                    raise CheckpointCorruptError(f"{source}: unexpected optimizer tensor '{name}'")
        optimizers[label] = snapshot

    (config_length,) = reader.unpack("<I")
    try:
        config_text = reader.take(config_length).decode("utf-8")
    except UnicodeDecodeError as error:
        raise CheckpointCorruptError(f"{source}: config snapshot is not UTF-8") from error
    if reader.offset != len(raw):
        raise CheckpointCorruptError(f"{source}: {len(raw) - reader.offset} unexpected trailing bytes")

    return Checkpoint(
        stage=stages[stage_tag],
        tensors={name: value.astype(np.float64) for name, value in tensors.items()},
        optimizers=optimizers,
        config_text=config_text,
        epoch=epoch,
        seed=seed,
    )


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    """Writes a checkpoint atomically: a temporary file next to `path` is renamed over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = encode_checkpoint(checkpoint)
    handle, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(handle, "wb") as temp_file:
            temp_file.write(payload)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.remove(temp_name)
        raise
    logger.info(f"wrote {checkpoint.stage} checkpoint at epoch {checkpoint.epoch} to {path}")
    return path


def load_checkpoint(path: Union[str, Path], stage: Optional[str] = None) -> Checkpoint:
    """Reads a checkpoint, optionally requiring its stage ('ae' or 'gan')."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    checkpoint = decode_checkpoint(path.read_bytes(), str(path))
    if stage is not None:
        checkpoint.require_stage(stage)
    return checkpoint
