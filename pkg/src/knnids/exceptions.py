"""Exception types shared across the package."""


class KnnidsError(Exception):
    """Base class for all package errors."""


class DegenerateDimension(KnnidsError):
    """A feature dimension has identical min and max in the training data."""


class InsufficientData(KnnidsError):
    """Not enough data to perform the requested operation."""


class NotEnoughReferencePoints(KnnidsError):
    """Reference set smaller than the requested neighbor count k."""


class DimensionMismatch(KnnidsError):
    """Observation dimensionality does not match the model / bounds."""


class OutOfDomain(KnnidsError):
    """Argument outside the mathematical domain of a special function."""


class ConvergenceError(KnnidsError):
    """An iterative solver failed to converge within its step budget."""


class NoPositiveRoot(KnnidsError):
    """The moment-condition equation has no positive non-trivial root.

    Usually means the training data is too sparse (phi too large) for the
    asymptotic threshold formula to apply.
    """


class DegenerateTrivialOnly(KnnidsError):
    """Both Lambert-W branches collapse onto the trivial root (phi*theta == 1)."""


class EmptyWindow(KnnidsError):
    """Localization window (q, T] is empty."""


class ParseError(KnnidsError):
    """A data file failed to parse; carries the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class InvalidSpec(KnnidsError):
    """A scenario specification fails validation."""


class VersionMismatch(KnnidsError):
    """Model file carries an unsupported format version."""


class CorruptModel(KnnidsError):
    """Model file failed its integrity checksum."""


class ConfigError(KnnidsError):
    """Benchmark configuration invalid; message names the offending key."""
