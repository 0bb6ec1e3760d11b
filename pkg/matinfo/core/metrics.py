"""
Matrix information quantities and clustering quality indices.

Entropies are in nats. The 0 * log 0 := 0 convention extends the matrix
entropy continuously from positive-definite to PSD Gram matrices.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.metrics import davies_bouldin_score, silhouette_score

from matinfo.common.constants import (
    DEGENERATE_ENTROPY,
    METRIC_RECORD_KEYS,
    NUMERICAL_RANK_RTOL,
    SPLITS,
    SUBADDITIVITY_SLACK,
    ZERO_EIGENVALUE_RTOL,
    ZERO_NORM_TOLERANCE,
    ZERO_SINGULAR_VALUE,
)
from matinfo.common.errors import (
    CoincidentCentroidsError,
    DataInvariantError,
    DegenerateEntropyError,
    DimensionMismatchError,
    InsufficientClassSizeError,
    ZeroMatrixError,
)
from matinfo.common.logging_config import get_logger
from matinfo.core.linalg import FeatureMatrix, GramMatrix, hadamard, normalize_columns, singular_values

_log = get_logger(__name__)


def shannon_entropy(weights: np.ndarray) -> float:
    """-sum p log p over the positive entries of a probability vector."""
    positive = weights[weights > 0]
    return float(-np.sum(positive * np.log(positive)))


def spectral_entropy(values: np.ndarray, size: int) -> float:
    """Matrix entropy from a clamped spectrum of a size x size Gram matrix.

    Eigenvalues with weight lambda / N <= ZERO_EIGENVALUE_RTOL are exact zeros.
    The remaining weights are normalized by their sum (the trace N, by the
    Gram invariant) so a rank-one spectrum gives exactly 0.
    """
    kept = values[values > ZERO_EIGENVALUE_RTOL * size]
    if kept.size <= 1:
        return 0.0
    entropy = shannon_entropy(kept / kept.sum())
    return min(max(entropy, 0.0), math.log(size))


def matrix_entropy(K: GramMatrix) -> float:
    """H(K) = -sum_i (lambda_i / N) log(lambda_i / N)."""
    return spectral_entropy(K.spectrum.values, K.size)


def effective_rank(Z: FeatureMatrix) -> float:
    """exp of the Shannon entropy of the normalized singular values."""
    values = singular_values(Z).values
    if values.size == 0 or values[0] <= ZERO_SINGULAR_VALUE:
        raise ZeroMatrixError("all singular values are zero; effective rank is undefined")
    kept = values[values > NUMERICAL_RANK_RTOL * values[0]]
    return math.exp(shannon_entropy(kept / kept.sum()))


@dataclass(frozen=True)
class InformationSummary:
    """Entropies of a Gram pair and the derived MI / MIR / HDR."""

    h1: float
    h2: float
    h_joint: float
    mi: float
    mir: Optional[float]
    hdr: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _ratio_of_mi(mi: float, h1: float, h2: float) -> Optional[float]:
    denominator = min(h1, h2)
    if denominator <= DEGENERATE_ENTROPY:
        return None
    return mi / denominator


def _entropy_difference_ratio(h1: float, h2: float) -> float:
    largest = max(h1, h2)
    if largest <= DEGENERATE_ENTROPY:
        return 0.0
    return min(abs(h1 - h2) / largest, 1.0)


def information_summary(K1: GramMatrix, K2: GramMatrix) -> InformationSummary:
    """All pairwise information quantities from a single Hadamard product."""
    if K1.size != K2.size:
        raise DimensionMismatchError(K1.size, K2.size)
    h1 = matrix_entropy(K1)
    h2 = matrix_entropy(K2)
    h_joint = matrix_entropy(hadamard(K1, K2))
    mi = h1 + h2 - h_joint
    ratio = _ratio_of_mi(mi, h1, h2)

    if mi < -SUBADDITIVITY_SLACK:
        _log.warning("Matrix MI is negative (%.3e); H(K1*K2) exceeds H(K1) + H(K2).", mi)
    if ratio is not None and ratio > 1.0 + SUBADDITIVITY_SLACK:
        _log.warning("MIR %.12f exceeds 1; H(K1*K2) is below max(H(K1), H(K2)).", ratio)

    return InformationSummary(
        h1=h1,
        h2=h2,
        h_joint=h_joint,
        mi=mi,
        mir=ratio,
        hdr=_entropy_difference_ratio(h1, h2),
    )


def matrix_mi(K1: GramMatrix, K2: GramMatrix) -> float:
    """MI(K1, K2) = H(K1) + H(K2) - H(K1 * K2)."""
    return information_summary(K1, K2).mi


def mir(K1: GramMatrix, K2: GramMatrix) -> float:
    """Matrix mutual information ratio MI / min(H(K1), H(K2))."""
    summary = information_summary(K1, K2)
    if summary.mir is None:
        raise DegenerateEntropyError(
            f"MIR undefined: min entropy {min(summary.h1, summary.h2):.3e} is (near) zero"
        )
    return summary.mir


def hdr(K1: GramMatrix, K2: GramMatrix) -> float:
    """Matrix entropy difference ratio |H(K1) - H(K2)| / max(H(K1), H(K2))."""
    if K1.size != K2.size:
        raise DimensionMismatchError(K1.size, K2.size)
    return _entropy_difference_ratio(matrix_entropy(K1), matrix_entropy(K2))


def _labelled_points(Z: FeatureMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not Z.has_labels:
        raise DataInvariantError("clustering indices need labelled features")
    classes, counts = np.unique(Z.labels, return_counts=True)
    if classes.size < 2:
        raise DataInvariantError(f"clustering indices need at least 2 classes (got {classes.size})")
    # Euclidean distance on the unit sphere, monotone in cosine distance.
    points = normalize_columns(Z).data.T
    return points, classes, counts


def silhouette(Z: FeatureMatrix) -> float:
    """Mean silhouette coefficient over samples, on L2-normalized features."""
    points, classes, counts = _labelled_points(Z)
    for label, count in zip(classes, counts):
        if count < 2:
            raise InsufficientClassSizeError(int(label), int(count))
    distances = cdist(points, points)
    # a(i) = b(i) = 0 gives S(i) = 0
    return float(silhouette_score(distances, Z.labels, metric="precomputed"))


def davies_bouldin(Z: FeatureMatrix) -> float:
    """Davies-Bouldin index on L2-normalized features."""
    points, classes, _ = _labelled_points(Z)
    centroids = np.stack([points[Z.labels == label].mean(axis=0) for label in classes])
    separation = cdist(centroids, centroids)
    for i in range(classes.size):
        for j in range(i + 1, classes.size):
            if separation[i, j] <= ZERO_NORM_TOLERANCE:
                raise CoincidentCentroidsError(int(classes[i]), int(classes[j]))
    return float(davies_bouldin_score(points, Z.labels))


@dataclass(frozen=True)
class MetricRecord:
    """One evaluation step's scalar metrics, serialized as a MetricsLog line."""

    step: int
    split: str
    h_feat: float
    h_weights: float
    mi: float
    mir: Optional[float]
    hdr: float
    accuracy: float
    loss: float

    def __post_init__(self) -> None:
        if self.step < 0:
            raise DataInvariantError(f"step must be nonnegative (got {self.step})")
        if self.split not in SPLITS:
            raise DataInvariantError(f"split must be one of {SPLITS} (got {self.split!r})")
        if not 0.0 <= self.hdr <= 1.0:
            raise DataInvariantError(f"hdr must lie in [0, 1] (got {self.hdr})")
        if self.mir is not None and self.mir < -SUBADDITIVITY_SLACK:
            raise DataInvariantError(f"mir must be nonnegative (got {self.mir})")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        return {key: data[key] for key in METRIC_RECORD_KEYS}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricRecord":
        return cls(**{key: data[key] for key in METRIC_RECORD_KEYS})


__all__ = [
    "InformationSummary",
    "MetricRecord",
    "davies_bouldin",
    "effective_rank",
    "hdr",
    "information_summary",
    "matrix_entropy",
    "matrix_mi",
    "mir",
    "shannon_entropy",
    "silhouette",
    "spectral_entropy",
]
