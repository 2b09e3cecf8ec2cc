"""Exception types shared across the package.

Every error raised on a contract violation derives from IdtError so callers
can catch the package's failures with one clause.
"""


class IdtError(Exception):
    """Base class for all package errors."""


class ConfigError(IdtError):
    """Invalid configuration (groupings, loop configs, suite files)."""


class CalibrationError(IdtError):
    """Not enough data, or unusable data, to fit a discretizer or baseline."""


class FormatError(IdtError):
    """Malformed record or dimension mismatch in a transition stream."""


class EstimationError(IdtError):
    """Window/stream estimation called with unusable input."""


class DistributionError(IdtError):
    """Invalid probability table handed to the exact-computation routines."""


class OracleError(IdtError):
    """Stationary analysis failed (reducible or non-converging chain)."""


class ReportError(IdtError):
    """Summary requested over an empty set of trials."""


class IoError(IdtError):
    """Stream source unreachable or unusable."""
