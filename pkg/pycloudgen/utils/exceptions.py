"""Exception hierarchy shared across pycloudgen."""


class PyCloudGenError(Exception):
    """Base class for every error raised deliberately by pycloudgen."""


class ShapeMismatchError(PyCloudGenError, ValueError):
    """Operand shapes are incompatible for the requested operation."""


class SecondOrderUnsupportedError(PyCloudGenError, RuntimeError):
    """An op on a re-entrant differentiation path has no graph-building backward."""


class NonFiniteError(PyCloudGenError, FloatingPointError):
    """An op produced NaN or Inf while debug checks were enabled."""


class NonFiniteLossError(PyCloudGenError, FloatingPointError):
    """A training loss became NaN or Inf."""


class CloudFormatError(PyCloudGenError, ValueError):
    """A point-cloud file could not be parsed."""


class ManifestError(PyCloudGenError, ValueError):
    """A dataset manifest is missing or malformed."""


class ConfigError(PyCloudGenError, ValueError):
    """A run configuration is invalid."""


class CheckpointError(PyCloudGenError, ValueError):
    """A checkpoint could not be read, written or applied."""


class CheckpointCorruptError(CheckpointError):
    """Bad magic or truncated checkpoint file."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint written by an unsupported format version."""


class CheckpointStageError(CheckpointError):
    """Checkpoint stage tag does not match what the caller needs."""


class FrozenDecoderError(PyCloudGenError, RuntimeError):
    """A decoder marked frozen received a gradient or an update."""
