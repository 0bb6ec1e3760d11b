"""
Neural-Collapse reference constructions and closed-form checks.

* `simplex_etf` / `structure_matrix` build the NC 2 geometry and E(alpha)
* `nc_targets` evaluates the closed-form MIR / HDR / entropy under collapse
* `nc_check` measures NC 1-3 residuals of trained features and weights
* `affine_regression_error` / `verify_rank_bound` evaluate the
  regression-error inequalities relating two representations
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np

from matinfo.common.constants import EIGENVALUE_FLOOR
from matinfo.common.errors import (
    DataInvariantError,
    DegenerateClassCountError,
    DimensionMismatchError,
    DimensionTooSmallError,
    MissingClassError,
    NotPsdError,
    RankOrderViolationError,
)
from matinfo.common.logging_config import get_logger
from matinfo.core.linalg import (
    FeatureMatrix,
    GramMatrix,
    gram,
    normalize_columns,
    numerical_rank,
    singular_values,
)
from matinfo.core.metrics import information_summary, matrix_entropy

_log = get_logger(__name__)

UNIT_NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ClassStatistics:
    """Global mean, class means and centered class means of labelled features."""

    global_mean: np.ndarray
    class_means: np.ndarray
    centered_means: np.ndarray
    counts: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.class_means.shape[1]

    @classmethod
    def from_features(cls, features: FeatureMatrix, num_classes: Optional[int] = None) -> "ClassStatistics":
        if not features.has_labels:
            raise DataInvariantError("class statistics need labelled features")
        num_classes = num_classes or features.num_classes
        if num_classes < 2:
            raise DegenerateClassCountError(num_classes)
        counts = np.bincount(features.labels, minlength=num_classes)
        if counts.shape[0] > num_classes:
            raise DataInvariantError(f"labels exceed {num_classes} classes")
        missing = np.flatnonzero(counts == 0)
        if missing.size:
            raise MissingClassError(int(missing[0]))
        sums = np.zeros((features.dim, num_classes))
        np.add.at(sums.T, features.labels, features.data.T)
        class_means = sums / counts
        global_mean = features.data.mean(axis=1)
        return cls(
            global_mean=global_mean,
            class_means=class_means,
            centered_means=class_means - global_mean[:, None],
            counts=counts,
        )


def simplex_etf(num_classes: int, dim: int, seed: int = 0) -> FeatureMatrix:
    """C unit vectors in R^d with pairwise cosine -1/(C-1).

    The centered standard simplex (I_C - 11^T / C) is expressed in an
    orthonormal basis of its (C-1)-dimensional span and embedded into R^d
    through a seeded random orthonormal frame.
    """
    if num_classes < 2:
        raise DegenerateClassCountError(num_classes)
    if dim < num_classes - 1:
        raise DimensionTooSmallError(
            f"a {num_classes}-class simplex needs dimension >= {num_classes - 1} (got {dim})"
        )
    centered = np.eye(num_classes) - np.full((num_classes, num_classes), 1.0 / num_classes)
    span, _ = np.linalg.qr(centered[:, : num_classes - 1])
    coordinates = span.T @ centered

    rng = np.random.default_rng(seed)
    frame, _ = np.linalg.qr(rng.standard_normal((dim, num_classes - 1)))
    vertices = frame @ coordinates
    return normalize_columns(FeatureMatrix(vertices))


def structure_matrix(alpha: float, num_classes: int) -> GramMatrix:
    """E(alpha) = (1 - alpha) I + alpha 11^T."""
    if num_classes < 1:
        raise DataInvariantError(f"structure matrix needs at least one class (got {num_classes})")
    if 1.0 + (num_classes - 1) * alpha < EIGENVALUE_FLOOR or 1.0 - alpha < EIGENVALUE_FLOOR:
        raise NotPsdError(f"E({alpha}) is not PSD for C={num_classes}")
    data = np.full((num_classes, num_classes), float(alpha))
    np.fill_diagonal(data, 1.0)
    return GramMatrix(data)


def structure_spectrum(alpha: float, num_classes: int) -> np.ndarray:
    """Closed-form descending spectrum of E(alpha)."""
    values = np.concatenate(
        [[1.0 + (num_classes - 1) * alpha], np.full(num_classes - 1, 1.0 - alpha)]
    )
    return np.sort(values)[::-1]


@dataclass(frozen=True)
class NcTargets:
    mir_target: float
    hdr_target: float
    h_target: float


def nc_targets(num_classes: int) -> NcTargets:
    """Closed-form MIR, HDR and entropy once Neural Collapse has happened."""
    if num_classes <= 2:
        raise DegenerateClassCountError(num_classes)
    c = float(num_classes)
    log_c1 = math.log(c - 1.0)
    mir_target = 1.0 / (c - 1.0) + (c - 2.0) * math.log(c - 2.0) / ((c - 1.0) * log_c1)
    return NcTargets(mir_target=mir_target, hdr_target=0.0, h_target=log_c1)


def hadamard_entropy_target(num_classes: int) -> float:
    """H(E(1/(C-1)^2)) = (2 - 1/(C-1)) log(C-1) - ((C-2)/(C-1)) log(C-2)."""
    c = float(num_classes)
    return (2.0 - 1.0 / (c - 1.0)) * math.log(c - 1.0) - ((c - 2.0) / (c - 1.0)) * math.log(c - 2.0)


@dataclass(frozen=True)
class NcReport:
    """NC 1-3 residuals plus observed and closed-form MIR / HDR."""

    num_classes: int
    nc1_residual: float
    nc2_residual: float
    nc3_residual: float
    hdr_observed: float
    mir_observed: Optional[float]
    mir_target: Optional[float]
    hdr_target: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def nc_check(features: FeatureMatrix, weights: FeatureMatrix) -> NcReport:
    """Measure NC 1-3 and the sample-level MIR / HDR.

    `weights` holds one column per class (W^T). The sample-level pair is
    Z1 = features and Z2 = [w_{y_1} ... w_{y_n}].
    """
    if features.dim != weights.dim:
        raise DimensionMismatchError(features.dim, weights.dim)
    num_classes = weights.size
    stats = ClassStatistics.from_features(features, num_classes)

    assigned = stats.class_means[:, features.labels]
    nc1 = float(np.mean(np.linalg.norm(features.data - assigned, axis=0)))

    cosines = gram(FeatureMatrix(stats.centered_means)).data
    ideal = (num_classes / (num_classes - 1.0)) * np.eye(num_classes) - 1.0 / (num_classes - 1.0)
    nc2 = float(np.max(np.abs(cosines - ideal)))

    w = weights.data
    m = stats.centered_means
    nc3 = float(np.linalg.norm(w / np.linalg.norm(w) - m / np.linalg.norm(m)))

    per_sample_weights = FeatureMatrix(w[:, features.labels])
    summary = information_summary(gram(features), gram(per_sample_weights))

    mir_target: Optional[float] = None
    if num_classes > 2:
        mir_target = nc_targets(num_classes).mir_target
    else:
        _log.info("MIR target is undefined for C=2; reporting null.")

    return NcReport(
        num_classes=num_classes,
        nc1_residual=nc1,
        nc2_residual=nc2,
        nc3_residual=nc3,
        hdr_observed=summary.hdr,
        mir_observed=summary.mir,
        mir_target=mir_target,
    )


@dataclass(frozen=True)
class AffineFit:
    weight: np.ndarray
    bias: np.ndarray
    error: float


def affine_fit(Z: FeatureMatrix, Y: FeatureMatrix) -> AffineFit:
    """Minimum-norm least squares of Y ~ W Z + b 1^T, solved on centered data."""
    if Z.size != Y.size:
        raise DimensionMismatchError(Z.size, Y.size)
    z_mean = Z.data.mean(axis=1, keepdims=True)
    y_mean = Y.data.mean(axis=1, keepdims=True)
    z_centered = Z.data - z_mean
    y_centered = Y.data - y_mean
    solution, _, _, _ = np.linalg.lstsq(z_centered.T, y_centered.T, rcond=None)
    weight = solution.T
    bias = (y_mean - weight @ z_mean)[:, 0]
    error = float(np.linalg.norm(y_centered - weight @ z_centered))
    return AffineFit(weight=weight, bias=bias, error=error)


@dataclass(frozen=True)
class AffineRegressionReport:
    error_y_from_z1: float
    error_y_from_z2: float
    error_z1_from_z2: float
    w1_frobenius: float

    @property
    def bound(self) -> float:
        return self.error_y_from_z1 + self.w1_frobenius * self.error_z1_from_z2

    def holds(self, tolerance: float = 1e-9) -> bool:
        """Whether err(Y|Z2) <= err(Y|Z1) + ||W1*||_F err(Z1|Z2)."""
        return self.error_y_from_z2 <= self.bound + tolerance * max(1.0, self.bound)


def affine_regression_error(Z1: FeatureMatrix, Z2: FeatureMatrix, Y: FeatureMatrix) -> AffineRegressionReport:
    """Affine regression errors relating two representations of one target."""
    for other in (Z2, Y):
        if other.size != Z1.size:
            raise DimensionMismatchError(Z1.size, other.size)
    from_z1 = affine_fit(Z1, Y)
    from_z2 = affine_fit(Z2, Y)
    z1_from_z2 = affine_fit(Z2, Z1)
    return AffineRegressionReport(
        error_y_from_z1=from_z1.error,
        error_y_from_z2=from_z2.error,
        error_z1_from_z2=z1_from_z2.error,
        w1_frobenius=float(np.linalg.norm(from_z1.weight)),
    )


@dataclass(frozen=True)
class RankBoundReport:
    """Lower bound chain for regressing Z1 on Z2 when rank(Z1) > rank(Z2)."""

    rank1: int
    rank2: int
    lhs: float
    rhs_lemma2: float
    rhs_intermediate: float
    rhs_theorem: float
    lemma2_holds: bool
    theorem_holds: Optional[bool]
    rank_ratio: float
    entropy_surrogate: Optional[float]

    @property
    def holds(self) -> bool:
        return self.lemma2_holds and self.theorem_holds is not False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def verify_rank_bound(Z1: FeatureMatrix, Z2: FeatureMatrix, tolerance: float = 1e-9) -> RankBoundReport:
    """Check lhs >= sum_{j=r2+2}^{r1} sigma_j^2 and that sum <= 1 - r2/r1."""
    if Z1.size != Z2.size:
        raise DimensionMismatchError(Z1.size, Z2.size)
    n = Z1.size
    rank1 = numerical_rank(Z1)
    rank2 = numerical_rank(Z2)
    if rank1 <= rank2:
        raise RankOrderViolationError(rank1, rank2)

    lhs = affine_fit(Z2, Z1).error ** 2 / n
    sigma = singular_values(Z1, source_dim=n).values / math.sqrt(n)
    # sigma_j for j = rank2 + 2 .. rank1 (1-indexed)
    tail = sigma[rank2 + 1 : rank1]
    rhs_lemma2 = float(np.sum(tail ** 2))
    rhs_intermediate = (rank1 - rank2 - 1) / rank1
    rhs_theorem = 1.0 - rank2 / rank1

    unit_columns = bool(np.all(np.abs(np.linalg.norm(Z1.data, axis=0) - 1.0) <= UNIT_NORM_TOLERANCE))
    theorem_holds: Optional[bool] = None
    if unit_columns:
        theorem_holds = rhs_lemma2 <= rhs_intermediate + tolerance and rhs_intermediate <= rhs_theorem + tolerance

    entropy_surrogate: Optional[float] = None
    try:
        h1 = matrix_entropy(gram(Z1))
        h2 = matrix_entropy(gram(Z2))
        entropy_surrogate = math.exp(h2 - h1)
    except DataInvariantError as exc:
        _log.debug("Entropy surrogate unavailable: %s", exc)

    return RankBoundReport(
        rank1=rank1,
        rank2=rank2,
        lhs=lhs,
        rhs_lemma2=rhs_lemma2,
        rhs_intermediate=rhs_intermediate,
        rhs_theorem=rhs_theorem,
        lemma2_holds=lhs >= rhs_lemma2 - tolerance * max(1.0, rhs_lemma2),
        theorem_holds=theorem_holds,
        rank_ratio=rank2 / rank1,
        entropy_surrogate=entropy_surrogate,
    )


__all__ = [
    "AffineFit",
    "AffineRegressionReport",
    "ClassStatistics",
    "NcReport",
    "NcTargets",
    "RankBoundReport",
    "affine_fit",
    "affine_regression_error",
    "hadamard_entropy_target",
    "nc_check",
    "nc_targets",
    "simplex_etf",
    "structure_matrix",
    "structure_spectrum",
    "verify_rank_bound",
]
