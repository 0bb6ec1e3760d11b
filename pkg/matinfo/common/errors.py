"""
Custom exception classes for matinfo.

Errors fall in three families that the CLI maps to exit codes:
``DataInvariantError`` and ``NumericalFailureError`` (exit 3) and
``InputFormatError`` (exit 2).
"""

from typing import Optional


class MatinfoError(Exception):
    """Base exception class for matinfo errors."""
    pass


class DataInvariantError(MatinfoError):
    """Raised when input data violates a mathematical invariant."""
    pass


class NumericalFailureError(MatinfoError):
    """Raised when a LAPACK routine fails to converge."""
    pass


class InputFormatError(MatinfoError):
    """Raised when a file, flag or configuration cannot be parsed."""
    pass


class ZeroNormColumnError(DataInvariantError):
    """Raised when a column is too small to be L2-normalized."""

    def __init__(self, index: int) -> None:
        super().__init__(f"column {index} has (near) zero norm and cannot be normalized")
        self.index = index


class NotGramMatrixError(DataInvariantError):
    """Raised when a matrix is not a unit-diagonal symmetric PSD similarity matrix."""
    pass


class NegativeEigenvalueError(DataInvariantError):
    """Raised when an eigenvalue lies below the PSD roundoff floor."""

    def __init__(self, value: float) -> None:
        super().__init__(f"eigenvalue {value:.3e} is below the PSD floor; input is not a Gram matrix")
        self.value = value


class DimensionMismatchError(DataInvariantError):
    """Raised when two matrices that must share a dimension do not."""

    def __init__(self, first: int, second: int) -> None:
        super().__init__(f"dimension mismatch: {first} != {second}")
        self.first = first
        self.second = second


class ZeroMatrixError(DataInvariantError):
    """Raised when every singular value of a matrix is zero."""
    pass


class DegenerateEntropyError(DataInvariantError):
    """Raised when an entropy used as a denominator is (near) zero."""
    pass


class InsufficientClassSizeError(DataInvariantError):
    """Raised when a class has fewer samples than a metric requires."""

    def __init__(self, label: int, size: int) -> None:
        super().__init__(f"class {label} has {size} sample(s); at least 2 are required")
        self.label = label
        self.size = size


class CoincidentCentroidsError(DataInvariantError):
    """Raised when two cluster centroids coincide."""

    def __init__(self, first: int, second: int) -> None:
        super().__init__(f"centroids of classes {first} and {second} coincide")
        self.first = first
        self.second = second


class DimensionTooSmallError(DataInvariantError):
    """Raised when an embedding dimension cannot host the requested geometry."""
    pass


class NotPsdError(DataInvariantError):
    """Raised when a structure matrix parameter makes it indefinite."""
    pass


class DegenerateClassCountError(DataInvariantError):
    """Raised when a closed form is undefined for the given class count."""

    def __init__(self, num_classes: int) -> None:
        super().__init__(
            f"closed-form targets need at least 3 classes (got {num_classes}); log(C-1) vanishes at C=2"
        )
        self.num_classes = num_classes


class MissingClassError(DataInvariantError):
    """Raised when a class has no samples."""

    def __init__(self, label: int) -> None:
        super().__init__(f"class {label} has no samples")
        self.label = label


class RankOrderViolationError(DataInvariantError):
    """Raised when rank(Z1) <= rank(Z2) for the rank-bound verifier."""

    def __init__(self, rank1: int, rank2: int) -> None:
        super().__init__(f"rank(Z1)={rank1} must exceed rank(Z2)={rank2}")
        self.rank1 = rank1
        self.rank2 = rank2


class NonFiniteActivationError(DataInvariantError):
    """Raised when a forward pass produces NaN or infinite activations."""
    pass


class DivergedLossError(DataInvariantError):
    """Raised when the training loss becomes non-finite."""

    def __init__(self, step: int, value: Optional[float] = None) -> None:
        super().__init__(f"loss diverged at step {step} (value={value})")
        self.step = step
        self.value = value


class ArchitectureMismatchError(DataInvariantError):
    """Raised when two checkpoints do not share an architecture."""
    pass


class EigFailureError(NumericalFailureError):
    """Raised when the symmetric eigensolver does not converge."""
    pass


class SvdFailureError(NumericalFailureError):
    """Raised when the SVD does not converge."""
    pass


class MatrixFileError(InputFormatError):
    """Raised when an npy / csv matrix file is malformed."""
    pass


class CheckpointFormatError(InputFormatError):
    """Raised when a checkpoint document is malformed."""
    pass


class ConfigurationError(InputFormatError):
    """Raised when a training configuration is invalid."""
    pass
