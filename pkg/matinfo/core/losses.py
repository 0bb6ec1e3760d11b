"""
Information losses with analytic spectral gradients.

Features are d x B (one column per batch sample), classifier weights are
d x C (one column per class). Every loss returns gradients for both.

The entropy used here is the fixed-trace form -sum (lambda / N) log(lambda / N)
evaluated on raw symmetric arrays, so finite differences may probe
perturbations that leave the unit-diagonal manifold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from matinfo.common.constants import (
    ENTROPY_TIE_TOLERANCE,
    FD_STEP_MAX,
    FD_STEP_MIN,
    GRADIENT_EIGENVALUE_CLIP,
    ZERO_NORM_TOLERANCE,
)
from matinfo.common.errors import (
    ConfigurationError,
    DataInvariantError,
    DimensionMismatchError,
    ZeroNormColumnError,
)
from matinfo.core.linalg import (
    FeatureMatrix,
    GramMatrix,
    gram_array,
    gram_backward,
    normalize_columns_backward,
    symmetric_eigh,
)


@dataclass(frozen=True)
class LossValueAndGrad:
    value: float
    grad_features: np.ndarray
    grad_weights: np.ndarray

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise DataInvariantError(f"loss value is not finite ({self.value})")
        if not (np.all(np.isfinite(self.grad_features)) and np.all(np.isfinite(self.grad_weights))):
            raise DataInvariantError("loss gradient contains non-finite entries")


def entropy_value_and_grad(array: np.ndarray) -> Tuple[float, np.ndarray]:
    """Value and gradient of -tr((A/N) log(A/N)) for a symmetric array A.

    The gradient is V diag(g'(lambda)) V^T with g'(x) = -(1/N)(log(x/N) + 1),
    evaluated at max(x, 1e-12). Repeated eigenvalues need no cross terms since
    the value is a spectral trace.
    """
    size = array.shape[0]
    values, vectors = symmetric_eigh(array)
    positive = values[values > 0.0] / size
    value = float(-np.sum(positive * np.log(positive)))
    clipped = np.maximum(values, GRADIENT_EIGENVALUE_CLIP)
    derivative = -(np.log(clipped / size) + 1.0) / size
    grad = (vectors * derivative) @ vectors.T
    return value, (grad + grad.T) / 2.0


def entropy_grad(K: GramMatrix) -> np.ndarray:
    """Gradient of the matrix entropy with respect to the entries of K."""
    return entropy_value_and_grad(K.data)[1]


def _unit_columns(raw: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(raw, axis=0)
    degenerate = np.flatnonzero(norms <= ZERO_NORM_TOLERANCE)
    if degenerate.size:
        raise ZeroNormColumnError(int(degenerate[0]))
    return raw / norms


def _gram_entropy(raw: np.ndarray) -> Tuple[float, np.ndarray]:
    """H(G(raw)) and its gradient with respect to the raw columns."""
    unit = _unit_columns(raw)
    value, grad_gram = entropy_value_and_grad(gram_array(unit))
    return value, normalize_columns_backward(raw, gram_backward(unit, grad_gram))


def _check_shapes(features: FeatureMatrix, weights: FeatureMatrix) -> np.ndarray:
    if not features.has_labels:
        raise DataInvariantError("information losses need labelled features")
    if features.dim != weights.dim:
        raise DimensionMismatchError(features.dim, weights.dim)
    if features.labels.size and int(features.labels.max()) >= weights.size:
        raise DataInvariantError(
            f"label {int(features.labels.max())} has no weight column ({weights.size} classes)"
        )
    return features.labels


def _scatter_to_weights(grad_per_sample: np.ndarray, labels: np.ndarray, num_classes: int) -> np.ndarray:
    grad = np.zeros((grad_per_sample.shape[0], num_classes))
    np.add.at(grad.T, labels, grad_per_sample.T)
    return grad


@dataclass(frozen=True)
class _PairEntropies:
    h_features: float
    h_weights: float
    h_joint: float
    grad_features: np.ndarray
    grad_weights: np.ndarray
    grad_joint_features: np.ndarray
    grad_joint_weights: np.ndarray


def _pair_entropies(features: FeatureMatrix, weights: FeatureMatrix) -> Tuple[_PairEntropies, np.ndarray]:
    labels = _check_shapes(features, weights)
    raw_f = features.data
    raw_v = weights.data[:, labels]
    unit_f = _unit_columns(raw_f)
    unit_v = _unit_columns(raw_v)
    gram_f = gram_array(unit_f)
    gram_v = gram_array(unit_v)

    h_f, s_f = entropy_value_and_grad(gram_f)
    h_v, s_v = entropy_value_and_grad(gram_v)
    h_joint, s_joint = entropy_value_and_grad(gram_f * gram_v)

    def back_f(grad_gram: np.ndarray) -> np.ndarray:
        return normalize_columns_backward(raw_f, gram_backward(unit_f, grad_gram))

    def back_v(grad_gram: np.ndarray) -> np.ndarray:
        return normalize_columns_backward(raw_v, gram_backward(unit_v, grad_gram))

    pair = _PairEntropies(
        h_features=h_f,
        h_weights=h_v,
        h_joint=h_joint,
        grad_features=back_f(s_f),
        grad_weights=back_v(s_v),
        grad_joint_features=back_f(s_joint * gram_v),
        grad_joint_weights=back_v(s_joint * gram_f),
    )
    return pair, labels


def cma_loss(features: FeatureMatrix, weights: FeatureMatrix) -> LossValueAndGrad:
    """Cross-modal alignment: sum over classes of H(G(class features + w_c)) / group length.

    Classes are visited in ascending order. A class absent from the batch
    forms a group of length 1 and contributes nothing.
    """
    labels = _check_shapes(features, weights)
    grad_features = np.zeros_like(features.data)
    grad_weights = np.zeros_like(weights.data)
    value = 0.0
    for label in range(weights.size):
        members = np.flatnonzero(labels == label)
        length = members.size + 1
        if length <= 1:
            continue
        group = np.concatenate([features.data[:, members], weights.data[:, label : label + 1]], axis=1)
        entropy, grad = _gram_entropy(group)
        value += entropy / length
        grad_features[:, members] += grad[:, :-1] / length
        grad_weights[:, label] += grad[:, -1] / length
    return LossValueAndGrad(max(value, 0.0), grad_features, grad_weights)


def mi_loss(features: FeatureMatrix, weights: FeatureMatrix, lambda_mi: float) -> LossValueAndGrad:
    """-lambda_mi * MI(G(f), G(V)) with V_i = w_{y_i}."""
    if lambda_mi < 0:
        raise ConfigurationError(f"lambda_mi must be nonnegative (got {lambda_mi})")
    if lambda_mi == 0:
        _check_shapes(features, weights)
        return LossValueAndGrad(0.0, np.zeros_like(features.data), np.zeros_like(weights.data))
    pair, labels = _pair_entropies(features, weights)
    mi = pair.h_features + pair.h_weights - pair.h_joint
    grad_f = pair.grad_features - pair.grad_joint_features
    grad_v = pair.grad_weights - pair.grad_joint_weights
    return LossValueAndGrad(
        -lambda_mi * mi,
        -lambda_mi * grad_f,
        -lambda_mi * _scatter_to_weights(grad_v, labels, weights.size),
    )


def hd_loss(features: FeatureMatrix, weights: FeatureMatrix, lambda_hd: float) -> LossValueAndGrad:
    """lambda_hd * |H(G(f)) - H(G(V))|; the subgradient at a tie is 0."""
    if lambda_hd < 0:
        raise ConfigurationError(f"lambda_hd must be nonnegative (got {lambda_hd})")
    labels = _check_shapes(features, weights)
    if lambda_hd == 0:
        return LossValueAndGrad(0.0, np.zeros_like(features.data), np.zeros_like(weights.data))
    raw_v = weights.data[:, labels]
    h_f, grad_f = _gram_entropy(features.data)
    h_v, grad_v = _gram_entropy(raw_v)
    difference = h_f - h_v
    sign = float(np.sign(difference)) if abs(difference) > ENTROPY_TIE_TOLERANCE else 0.0
    return LossValueAndGrad(
        lambda_hd * abs(difference),
        lambda_hd * sign * grad_f,
        -lambda_hd * sign * _scatter_to_weights(grad_v, labels, weights.size),
    )


def fd_gradient_oracle(loss_fn: Callable[[np.ndarray], float], point: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of `loss_fn` at `point`, one entry at a time."""
    if not FD_STEP_MIN <= step <= FD_STEP_MAX:
        raise ConfigurationError(f"finite-difference step must lie in [{FD_STEP_MIN}, {FD_STEP_MAX}] (got {step})")
    base = np.array(point, dtype=np.float64, copy=True)
    grad = np.zeros_like(base)
    for index in np.ndindex(base.shape):
        original = base[index]
        base[index] = original + step
        upper = loss_fn(base.copy())
        base[index] = original - step
        lower = loss_fn(base.copy())
        base[index] = original
        grad[index] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """||actual - expected||_F / ||expected||_F."""
    return float(np.linalg.norm(actual - expected) / max(np.linalg.norm(expected), 1e-300))


__all__ = [
    "LossValueAndGrad",
    "cma_loss",
    "entropy_grad",
    "entropy_value_and_grad",
    "fd_gradient_oracle",
    "hd_loss",
    "mi_loss",
    "relative_error",
]
