"""Exception types shared across the package.

The CLI maps each category to a stable nonzero exit code, so keep the
hierarchy flat and the categories coarse.
"""


class RfCodecError(Exception):
    """Base class for all package errors."""


class ConfigError(RfCodecError):
    """Invalid or inconsistent configuration (unknown scheme, bad spec)."""


class InputLengthError(RfCodecError):
    """Input sequence too short for the requested operation."""


class BoundsError(RfCodecError):
    """Index or offset outside the valid range."""


class DimensionError(RfCodecError):
    """Tensor/array shape or axis mismatch."""


class StateError(RfCodecError):
    """Operation requires a different model stage or training state."""


class FormatError(RfCodecError):
    """Malformed serialized container (bad magic, version, or layout)."""


class IntegrityError(RfCodecError):
    """Payload does not belong to the supplied model checkpoint."""


class CorruptionError(RfCodecError):
    """Decoded content violates its own declared invariants."""


class NumericsError(RfCodecError):
    """A numeric operation produced NaN or Inf."""


class AnalysisError(RfCodecError):
    """Degenerate input to an analysis routine."""
