"""Exception types shared across the qlan package."""


class QlanError(Exception):
    """Base class for all qlan-specific errors."""


class NonHermitianInput(QlanError):
    """Matrix handed to a Hermitian-only routine is too asymmetric."""


class DimensionMismatch(QlanError):
    """Operands have incompatible shapes."""


class DegenerateState(QlanError):
    """Optimization objective is flat; the state carries no usable signal."""


class IndexOutOfRange(QlanError):
    """Channel index outside the 1..8 grid."""


class DivisionByZeroAccidentals(QlanError):
    """CAR requested for a JSI with no accidental background."""


class Infeasible(QlanError):
    """No channel allocation satisfies the requested constraints."""


class InvalidDuration(QlanError):
    """Simulation duration outside the supported range."""


class ModelMismatch(QlanError):
    """Detector/clock model combination is inconsistent."""


class UnsortedInput(QlanError):
    """Event times handed to a routine requiring sorted input are not sorted."""


class BadMagic(QlanError):
    """Timetag file does not start with the QLTT magic bytes."""


class UnsupportedVersion(QlanError):
    """Timetag file version is newer than this reader understands."""


class TruncatedFile(QlanError):
    """Timetag file ends mid-header or mid-record."""


class UnsortedRecords(QlanError):
    """Timetag file records are not sorted by global bin."""


class ResolutionMismatch(QlanError):
    """Two streams with different clock resolutions cannot be correlated."""


class EmptyHistogram(QlanError):
    """Offset recovery requested on an empty histogram."""


class StreamTooShort(QlanError):
    """Accidental estimation windows fall outside the stream span."""


class KeyMismatch(QlanError):
    """Raw and accidental count maps do not share the same keys."""


class ZeroProbabilityProjection(QlanError):
    """Remote-state-preparation projection has (numerically) zero success probability."""


class InsufficientCounts(QlanError):
    """Too few post-selected events to attempt a reconstruction."""


class ChainNotConverged(QlanError):
    """Posterior sampler failed its split-chain convergence diagnostic."""


class ConfigError(QlanError):
    """Experiment configuration failed validation."""

    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")
