"""
Seeded property suites behind `matinfo verify`.

Each suite draws `instances` independent cases from `[seed, index]` and
checks closed forms (nc), regression inequalities (lemmas) or analytic
gradients against finite differences (gradients). Instances run on a
thread pool sized by MATINFO_THREADS; results are reported by index.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from matinfo.common.config import MatinfoSettings, limited_threads
from matinfo.common.errors import ConfigurationError, MatinfoError
from matinfo.common.logging_config import get_logger
from matinfo.core.collapse import (
    affine_fit,
    affine_regression_error,
    hadamard_entropy_target,
    nc_check,
    nc_targets,
    simplex_etf,
    structure_matrix,
    structure_spectrum,
    verify_rank_bound,
)
from matinfo.core.linalg import FeatureMatrix, gram, gram_array, symmetric_eigvals
from matinfo.core.losses import (
    LossValueAndGrad,
    cma_loss,
    entropy_value_and_grad,
    fd_gradient_oracle,
    hd_loss,
    mi_loss,
    relative_error,
)
from matinfo.core.metrics import effective_rank, hdr, matrix_entropy, mir

_log = get_logger(__name__)

SUITES = ("nc", "lemmas", "gradients")

CLOSED_FORM_TOLERANCE = 1e-9
SPECTRUM_TOLERANCE = 1e-10
NORMAL_EQUATION_TOLERANCE = 1e-8
GRADIENT_TOLERANCE = 1e-4
FD_STEP = 1e-5
MIN_EIGENGAP = 1e-3
MAX_REJECTIONS = 200


@dataclass
class InstanceResult:
    index: int
    failures: List[str] = field(default_factory=list)
    max_relative_error: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, condition: bool, message: str) -> None:
        if not condition:
            self.failures.append(message)


@dataclass
class SuiteReport:
    suite: str
    results: List[InstanceResult]

    @property
    def failed(self) -> List[InstanceResult]:
        return [result for result in self.results if not result.passed]

    @property
    def passed(self) -> bool:
        return not self.failed

    @property
    def max_relative_error(self) -> float:
        return max((result.max_relative_error for result in self.results), default=0.0)


def _close(actual: float, expected: float, tolerance: float = CLOSED_FORM_TOLERANCE) -> bool:
    return abs(actual - expected) <= tolerance


def _nc_instance(index: int, rng: np.random.Generator, result: InstanceResult) -> None:
    num_classes = int(rng.integers(3, 13))
    dim = num_classes - 1 + int(rng.integers(0, 10))
    means = simplex_etf(num_classes, dim, seed=int(rng.integers(2**31)))
    targets = nc_targets(num_classes)
    K = gram(means)

    h = matrix_entropy(K)
    result.check(_close(h, targets.h_target), f"H(G(M))={h!r} != log(C-1)={targets.h_target!r} (C={num_classes})")
    ratio = mir(K, K)
    result.check(_close(ratio, targets.mir_target), f"MIR={ratio!r} != {targets.mir_target!r} (C={num_classes})")
    difference = hdr(K, K)
    result.check(_close(difference, 0.0), f"HDR={difference!r} != 0 (C={num_classes})")
    rank = effective_rank(means)
    result.check(_close(rank, num_classes - 1), f"erank={rank!r} != {num_classes - 1}")

    alpha = -1.0 / (num_classes - 1)
    spectrum = structure_matrix(alpha, num_classes).spectrum.values
    closed = structure_spectrum(alpha, num_classes)
    result.check(
        bool(np.max(np.abs(spectrum - closed)) <= SPECTRUM_TOLERANCE),
        f"spectrum of E({alpha:.4f}) deviates from closed form",
    )
    joint = matrix_entropy(structure_matrix(1.0 / (num_classes - 1) ** 2, num_classes))
    result.check(
        _close(joint, hadamard_entropy_target(num_classes)),
        f"H(E(1/(C-1)^2))={joint!r} != {hadamard_entropy_target(num_classes)!r}",
    )

    repeats = int(rng.integers(1, 5))
    labels = np.repeat(np.arange(num_classes), repeats)
    features = FeatureMatrix(means.data[:, labels], labels, num_classes)
    scale = float(rng.uniform(0.5, 3.0))
    report = nc_check(features, FeatureMatrix(scale * means.data))
    for name in ("nc1_residual", "nc2_residual", "nc3_residual", "hdr_observed"):
        value = getattr(report, name)
        result.check(value <= CLOSED_FORM_TOLERANCE, f"{name}={value!r} on an exact collapse")


def _normal_equation_error(Z: np.ndarray, Y: np.ndarray) -> float:
    z = Z - Z.mean(axis=1, keepdims=True)
    y = Y - Y.mean(axis=1, keepdims=True)
    weight = np.linalg.solve(z @ z.T, z @ y.T).T
    return float(np.linalg.norm(y - weight @ z))


def _low_rank(rng: np.random.Generator, dim: int, rank: int, size: int) -> np.ndarray:
    return rng.standard_normal((dim, rank)) @ rng.standard_normal((rank, size))


def _lemmas_instance(index: int, rng: np.random.Generator, result: InstanceResult) -> None:
    size = int(rng.integers(12, 40))
    d1, d2, dy = (int(v) for v in rng.integers(2, 8, size=3))
    Z1 = FeatureMatrix(rng.standard_normal((d1, size)))
    Z2 = FeatureMatrix(rng.standard_normal((d2, size)))
    Y = FeatureMatrix(rng.standard_normal((dy, size)))

    report = affine_regression_error(Z1, Z2, Y)
    result.check(
        report.holds(),
        f"affine bound violated: {report.error_y_from_z2!r} > {report.bound!r}",
    )
    for source, target, label in ((Z1, Y, "Y|Z1"), (Z2, Y, "Y|Z2"), (Z2, Z1, "Z1|Z2")):
        lstsq_error = affine_fit(source, target).error
        normal_error = _normal_equation_error(source.data, target.data)
        result.check(
            abs(lstsq_error - normal_error) <= NORMAL_EQUATION_TOLERANCE * max(1.0, normal_error),
            f"least squares {label} error {lstsq_error!r} disagrees with normal equations {normal_error!r}",
        )

    rank1 = int(rng.integers(3, 9))
    rank2 = int(rng.integers(1, rank1))
    dim1 = rank1 + int(rng.integers(0, 4))
    dim2 = rank2 + int(rng.integers(0, 4))
    raw1 = _low_rank(rng, dim1, rank1, size)
    unit1 = FeatureMatrix(raw1 / np.linalg.norm(raw1, axis=0))
    low2 = FeatureMatrix(_low_rank(rng, dim2, rank2, size))
    bound = verify_rank_bound(unit1, low2)
    result.check(bound.rank1 == rank1 and bound.rank2 == rank2, f"ranks {bound.rank1}/{bound.rank2} != {rank1}/{rank2}")
    result.check(bound.lemma2_holds, f"regression error {bound.lhs!r} below tail sum {bound.rhs_lemma2!r}")
    result.check(bound.theorem_holds is True, f"tail sum {bound.rhs_lemma2!r} exceeds 1 - r2/r1 = {bound.rhs_theorem!r}")


def _eigengap_ok(array: np.ndarray) -> bool:
    """Distinct nonzero eigenvalues are separated by at least MIN_EIGENGAP."""
    values = symmetric_eigvals(array)
    nonzero = values[values > 1e-8 * array.shape[0]]
    return nonzero.size < 2 or float(np.min(-np.diff(nonzero))) >= MIN_EIGENGAP


def _draw_batch(rng: np.random.Generator) -> Optional[Tuple[FeatureMatrix, FeatureMatrix]]:
    num_classes = 3
    dim = 8
    labels = np.concatenate([np.arange(num_classes), rng.integers(0, num_classes, size=3)])
    features = FeatureMatrix(rng.standard_normal((dim, labels.size)), labels, num_classes)
    weights = FeatureMatrix(rng.standard_normal((dim, num_classes)))
    grams = [gram(features).data, gram(FeatureMatrix(weights.data[:, labels])).data]
    grams.append(grams[0] * grams[1])
    for label in range(num_classes):
        members = np.flatnonzero(labels == label)
        group = np.concatenate([features.data[:, members], weights.data[:, label : label + 1]], axis=1)
        grams.append(gram_array(group / np.linalg.norm(group, axis=0)))
    if not all(_eigengap_ok(array) for array in grams):
        return None
    if abs(matrix_entropy(gram(features)) - matrix_entropy(gram(FeatureMatrix(weights.data[:, labels])))) <= MIN_EIGENGAP:
        return None
    return features, weights


def _check_loss(
    name: str,
    loss: Callable[[FeatureMatrix, FeatureMatrix], LossValueAndGrad],
    features: FeatureMatrix,
    weights: FeatureMatrix,
    result: InstanceResult,
) -> None:
    analytic = loss(features, weights)
    numeric_features = fd_gradient_oracle(
        lambda x: loss(features.with_data(x), weights).value, features.data, FD_STEP
    )
    numeric_weights = fd_gradient_oracle(
        lambda w: loss(features, FeatureMatrix(w)).value, weights.data, FD_STEP
    )
    for part, exact, approx in (
        ("features", analytic.grad_features, numeric_features),
        ("weights", analytic.grad_weights, numeric_weights),
    ):
        error = relative_error(exact, approx)
        result.max_relative_error = max(result.max_relative_error, error)
        result.check(error < GRADIENT_TOLERANCE, f"{name} gradient w.r.t. {part}: relative error {error:.3e}")


def _gradients_instance(index: int, rng: np.random.Generator, result: InstanceResult) -> None:
    drawn = None
    for _ in range(MAX_REJECTIONS):
        drawn = _draw_batch(rng)
        if drawn is not None:
            break
    if drawn is None:
        result.check(False, f"no instance with eigengap >= {MIN_EIGENGAP} after {MAX_REJECTIONS} draws")
        return
    features, weights = drawn

    K = gram(features).data
    value, analytic = entropy_value_and_grad(K)
    numeric = fd_gradient_oracle(lambda a: entropy_value_and_grad(a)[0], K, FD_STEP)
    error = relative_error(analytic, numeric)
    result.max_relative_error = max(result.max_relative_error, error)
    result.check(error < GRADIENT_TOLERANCE, f"entropy gradient: relative error {error:.3e}")

    lam = float(rng.uniform(0.5, 2.0))
    _check_loss("cma", cma_loss, features, weights, result)
    _check_loss("mi", lambda f, w: mi_loss(f, w, lam), features, weights, result)
    _check_loss("hd", lambda f, w: hd_loss(f, w, lam), features, weights, result)


_SUITES: Dict[str, Callable[[int, np.random.Generator, InstanceResult], None]] = {
    "nc": _nc_instance,
    "lemmas": _lemmas_instance,
    "gradients": _gradients_instance,
}


def _run_instance(suite: str, index: int, seed: int) -> InstanceResult:
    result = InstanceResult(index)
    rng = np.random.default_rng([seed, index])
    try:
        _SUITES[suite](index, rng, result)
    except MatinfoError as exc:
        result.check(False, f"{type(exc).__name__}: {exc}")
    return result


def run_suite(
    suite: str,
    instances: int,
    seed: int = 0,
    settings: Optional[MatinfoSettings] = None,
) -> SuiteReport:
    """Run `instances` seeded cases of a suite; the report is ordered by index."""
    if suite not in _SUITES:
        raise ConfigurationError(f"unknown suite {suite!r}; choose from {SUITES}")
    if instances < 1:
        raise ConfigurationError(f"instances must be at least 1 (got {instances})")
    with limited_threads(settings) as threads:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda i: _run_instance(suite, i, seed), range(instances)))
    report = SuiteReport(suite, results)
    _log.info("Suite %s: %d/%d instances passed", suite, instances - len(report.failed), instances)
    return report


__all__ = ["InstanceResult", "SUITES", "SuiteReport", "run_suite"]
