"""
Dense real linear algebra kernels for matinfo.

Provides the three value types every other module consumes:
* `FeatureMatrix` - d x N column-per-sample matrix with optional labels
* `GramMatrix`    - N x N unit-diagonal PSD similarity matrix
* `Spectrum`      - descending nonnegative eigen/singular values

All values are immutable (read-only numpy buffers), so every function here
is safe to call from several threads at once. A GramMatrix decomposes itself
eagerly at construction; concurrent readers always see the same spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from matinfo.common.constants import (
    DIAGONAL_TOLERANCE,
    EIGENVALUE_FLOOR,
    NUMERICAL_RANK_RTOL,
    SYMMETRY_TOLERANCE,
    TRACE_TOLERANCE,
    ZERO_NORM_TOLERANCE,
)
from matinfo.common.errors import (
    DataInvariantError,
    DimensionMismatchError,
    EigFailureError,
    NegativeEigenvalueError,
    NotGramMatrixError,
    SvdFailureError,
    ZeroNormColumnError,
)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FeatureMatrix:
    """Column-per-sample real matrix (d rows x N samples) with optional labels."""

    data: np.ndarray
    labels: Optional[np.ndarray] = None
    num_classes: Optional[int] = None

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2:
            raise DataInvariantError(f"feature matrix must be 2-D (got {data.ndim}-D)")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise DataInvariantError(f"feature matrix must be non-empty (got shape {data.shape})")
        if not np.all(np.isfinite(data)):
            raise DataInvariantError("feature matrix contains non-finite entries")
        object.__setattr__(self, "data", _frozen(data))

        if self.labels is None:
            if self.num_classes is not None:
                raise DataInvariantError("num_classes given without labels")
            return

        raw = np.asarray(self.labels)
        if raw.ndim != 1 or raw.shape[0] != data.shape[1]:
            raise DimensionMismatchError(int(raw.size), data.shape[1])
        labels = raw.astype(np.int64)
        if not np.array_equal(labels, raw):
            raise DataInvariantError("labels must be integers")
        if labels.size and labels.min() < 0:
            raise DataInvariantError("labels must be nonnegative")
        num_classes = self.num_classes
        if num_classes is None:
            num_classes = int(labels.max()) + 1
        if labels.size and labels.max() >= num_classes:
            raise DataInvariantError(
                f"label {int(labels.max())} out of range for {num_classes} classes"
            )
        object.__setattr__(self, "labels", _frozen(labels.copy()))
        object.__setattr__(self, "num_classes", int(num_classes))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def size(self) -> int:
        return self.data.shape[1]

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def with_data(self, data: np.ndarray) -> "FeatureMatrix":
        """Same labels, new column data."""
        return FeatureMatrix(data, self.labels, self.num_classes)

    def select(self, indices: np.ndarray) -> "FeatureMatrix":
        """Subset of columns (labels follow)."""
        indices = np.asarray(indices, dtype=np.int64)
        labels = None if self.labels is None else self.labels[indices]
        return FeatureMatrix(self.data[:, indices], labels, self.num_classes if labels is not None else None)


@dataclass(frozen=True)
class Spectrum:
    """Descending nonnegative eigenvalues or singular values."""

    values: np.ndarray
    source_dim: int

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 1 or values.shape[0] != self.source_dim:
            raise DataInvariantError(
                f"spectrum length {values.size} does not match source dimension {self.source_dim}"
            )
        if values.size and values.min() < 0:
            raise DataInvariantError("spectrum values must be nonnegative")
        if np.any(np.diff(values) > 0):
            raise DataInvariantError("spectrum values must be sorted in descending order")
        object.__setattr__(self, "values", _frozen(values))

    def __len__(self) -> int:
        return self.source_dim

    def total(self) -> float:
        return float(self.values.sum())


def symmetric_eigh(array: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a real symmetric array, eigenvalues descending.

    The input is symmetrized as (A + A^T) / 2 first. No clamping is applied.
    """
    array = np.asarray(array, dtype=np.float64)
    symmetric = (array + array.T) / 2.0
    try:
        values, vectors = np.linalg.eigh(symmetric)
    except np.linalg.LinAlgError as exc:
        raise EigFailureError(f"symmetric eigensolver did not converge: {exc}") from exc
    order = np.arange(values.shape[0])[::-1]
    return values[order], vectors[:, order]


def symmetric_eigvals(array: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of a real symmetric array."""
    array = np.asarray(array, dtype=np.float64)
    try:
        values = np.linalg.eigvalsh((array + array.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise EigFailureError(f"symmetric eigensolver did not converge: {exc}") from exc
    return values[::-1].copy()


def _validate_gram(array: np.ndarray) -> None:
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise NotGramMatrixError(f"Gram matrix must be square (got shape {array.shape})")
    if array.shape[0] < 1:
        raise NotGramMatrixError("Gram matrix must be non-empty")
    if not np.all(np.isfinite(array)):
        raise NotGramMatrixError("Gram matrix contains non-finite entries")
    asymmetry = float(np.max(np.abs(array - array.T)))
    if asymmetry > SYMMETRY_TOLERANCE:
        raise NotGramMatrixError(f"Gram matrix is not symmetric (max |K - K^T| = {asymmetry:.3e})")
    diagonal_error = float(np.max(np.abs(np.diag(array) - 1.0)))
    if diagonal_error > DIAGONAL_TOLERANCE:
        raise NotGramMatrixError(f"Gram matrix diagonal deviates from 1 by {diagonal_error:.3e}")
    n = array.shape[0]
    if abs(float(np.trace(array)) - n) > TRACE_TOLERANCE:
        raise NotGramMatrixError(f"Gram matrix trace {float(np.trace(array))!r} differs from {n}")


class GramMatrix:
    """N x N unit-diagonal symmetric PSD matrix with its eigendecomposition."""

    __slots__ = ("_data", "_spectrum", "_eigenvectors")

    def __init__(self, data: np.ndarray) -> None:
        array = np.array(data, dtype=np.float64, copy=True)
        _validate_gram(array)
        values, vectors = symmetric_eigh(array)
        smallest = float(values[-1])
        if smallest < EIGENVALUE_FLOOR:
            raise NegativeEigenvalueError(smallest)
        values = np.maximum(values, 0.0)
        self._data = _frozen(array)
        self._spectrum = Spectrum(values, array.shape[0])
        self._eigenvectors = _frozen(vectors)

    @classmethod
    def from_array(cls, data: np.ndarray) -> "GramMatrix":
        """Validate a user-supplied similarity matrix."""
        return cls(data)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def size(self) -> int:
        return self._data.shape[0]

    @property
    def spectrum(self) -> Spectrum:
        return self._spectrum

    @property
    def eigenvectors(self) -> np.ndarray:
        """Columns ordered like `spectrum.values`."""
        return self._eigenvectors

    def permuted(self, permutation: np.ndarray) -> "GramMatrix":
        """Simultaneous row/column permutation."""
        permutation = np.asarray(permutation, dtype=np.int64)
        return GramMatrix(self._data[np.ix_(permutation, permutation)])

    def __repr__(self) -> str:
        return f"GramMatrix(size={self.size})"


def normalize_columns(Z: FeatureMatrix) -> FeatureMatrix:
    """L2-normalize every column; labels pass through unchanged."""
    norms = np.linalg.norm(Z.data, axis=0)
    degenerate = np.flatnonzero(norms <= ZERO_NORM_TOLERANCE)
    if degenerate.size:
        raise ZeroNormColumnError(int(degenerate[0]))
    return Z.with_data(Z.data / norms)


def gram_array(Zhat: np.ndarray) -> np.ndarray:
    """Exactly symmetric Zhat^T Zhat with a unit diagonal, for unit columns."""
    product = Zhat.T @ Zhat
    product = (product + product.T) / 2.0
    np.fill_diagonal(product, 1.0)
    return product


def gram(Z: FeatureMatrix) -> GramMatrix:
    """Cosine-similarity Gram matrix G(Z) = Zhat^T Zhat."""
    return GramMatrix(gram_array(normalize_columns(Z).data))


def eigh(K: GramMatrix) -> Spectrum:
    """Eigenvalues of K, descending and clamped to >= 0."""
    return K.spectrum


def singular_values(Z: FeatureMatrix, source_dim: Optional[int] = None) -> Spectrum:
    """Descending singular values of Z, zero-padded up to `source_dim`."""
    try:
        values = np.linalg.svd(Z.data, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailureError(f"SVD did not converge: {exc}") from exc
    length = values.shape[0]
    if source_dim is None:
        source_dim = length
    if source_dim < length:
        raise DataInvariantError(f"source_dim {source_dim} is smaller than min(d, N) = {length}")
    padded = np.zeros(source_dim, dtype=np.float64)
    padded[:length] = values
    return Spectrum(padded, source_dim)


def numerical_rank(Z: FeatureMatrix) -> int:
    """Count of singular values above NUMERICAL_RANK_RTOL * sigma_max."""
    values = singular_values(Z).values
    if values.size == 0 or values[0] <= 0.0:
        return 0
    return int(np.count_nonzero(values > NUMERICAL_RANK_RTOL * values[0]))


def hadamard(K1: GramMatrix, K2: GramMatrix) -> GramMatrix:
    """Entrywise product; PSD by the Schur product theorem."""
    if K1.size != K2.size:
        raise DimensionMismatchError(K1.size, K2.size)
    return GramMatrix(K1.data * K2.data)


def normalize_columns_backward(raw: np.ndarray, grad_normalized: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. normalized columns back to the raw columns."""
    norms = np.linalg.norm(raw, axis=0)
    unit = raw / norms
    radial = np.sum(unit * grad_normalized, axis=0)
    return (grad_normalized - unit * radial) / norms


def gram_backward(Zhat: np.ndarray, grad_gram: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. Zhat of a scalar whose gradient w.r.t. Zhat^T Zhat is `grad_gram`."""
    return Zhat @ (grad_gram + grad_gram.T)


__all__ = [
    "FeatureMatrix",
    "GramMatrix",
    "Spectrum",
    "eigh",
    "gram",
    "gram_array",
    "gram_backward",
    "hadamard",
    "normalize_columns",
    "normalize_columns_backward",
    "numerical_rank",
    "singular_values",
    "symmetric_eigh",
    "symmetric_eigvals",
]
