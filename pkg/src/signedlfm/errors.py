"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so new error kinds should subclass one
of the classes below rather than raising bare ValueError.
"""


class SignedLfmError(Exception):
    """Base class for all package errors."""


class ParseError(SignedLfmError):
    """Malformed input line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateEdgeError(SignedLfmError):
    """A (user, target) pair appeared more than once."""


class InsufficientNormalError(SignedLfmError):
    """Balanced split requested but too few normal edges exist."""


class DivergenceError(SignedLfmError):
    """Training produced a non-finite loss or factor value."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class NoPairsError(SignedLfmError):
    """Triple sampling requested from an empty ranking-pair source."""


class DimensionError(SignedLfmError):
    """Operand dimensions incompatible with the requested operation."""


class DegenerateTrainingError(SignedLfmError):
    """Classifier training data contains a single class."""


class UndefinedMetricError(SignedLfmError):
    """Metric undefined for the given inputs (e.g. single-class AUC)."""


class PoolExhaustedError(SignedLfmError):
    """Synthetic generator cannot place the requested number of edges."""


class ProtocolError(SignedLfmError):
    """Experiment protocol settings infeasible for the given network."""


class ConfigError(SignedLfmError):
    """Bad run configuration: unknown key, unparsable or out-of-range value."""
