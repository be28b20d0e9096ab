"""Exception types shared across the package."""


class IminrError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateRotation(IminrError):
    """A 6D rotation could not be orthonormalized (vanishing norm)."""


class TopologyMismatch(IminrError):
    """Pose dimensionality disagrees with the skeleton topology."""


class DimensionMismatch(IminrError):
    """Vector dimensions disagree with what the operation requires."""


class ShapeMismatch(IminrError):
    """Array shapes disagree (optimizer state vs. parameters, etc.)."""


class EmptyTimeSubset(IminrError):
    """Reconstruction was requested over an empty set of time steps."""


class UnknownSequence(IminrError):
    """A sequence id has no entry in the codebook."""


class EmptyDataset(IminrError):
    """Training was requested on an empty dataset."""


class IoError(IminrError):
    """A file could not be read or written."""


class FormatVersionMismatch(IminrError):
    """A persisted artifact has a bad magic string, version, or truncation."""


class SchemaError(IminrError):
    """A structured-text record is malformed.

    Carries the 1-based line number when the problem is tied to a line.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientData(IminrError):
    """Too few samples to satisfy a minimum-population requirement."""


class DegenerateData(IminrError):
    """Samples carry no spread; mixture fitting cannot avoid collapse."""


class LengthOutOfRange(IminrError):
    """Requested sequence length is outside every fitted interval."""


class DegenerateCovarianceWarning(RuntimeWarning):
    """A feature covariance matrix is rank-deficient; jitter was added."""
