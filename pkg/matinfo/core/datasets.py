"""
Synthetic labelled datasets for desk-scale training.

Inputs are stored sample-major (N x d_in) for the network; the labelled
`Dataset` converts to a column-per-sample FeatureMatrix on request.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from matinfo.common.errors import ConfigurationError, DataInvariantError
from matinfo.core.collapse import simplex_etf
from matinfo.core.linalg import FeatureMatrix


@dataclass(frozen=True)
class Dataset:
    """Sample-major inputs with integer labels."""

    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        if self.inputs.ndim != 2:
            raise DataInvariantError(f"inputs must be 2-D (got {self.inputs.ndim}-D)")
        if self.labels.shape != (self.inputs.shape[0],):
            raise DataInvariantError("one label per input row is required")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.inputs[indices], self.labels[indices], self.num_classes)

    def as_features(self) -> FeatureMatrix:
        return FeatureMatrix(self.inputs.T, self.labels, self.num_classes)


def make_blobs(
    num_classes: int,
    input_dim: int,
    n_per_class: int,
    separation: float,
    noise_sigma: float,
    seed: int,
) -> FeatureMatrix:
    """Gaussian blobs around separation * simplex_etf(C, d_in), class-major order."""
    if num_classes < 2:
        raise ConfigurationError(f"blobs need at least 2 classes (got {num_classes})")
    if n_per_class < 2:
        raise ConfigurationError(f"blobs need at least 2 samples per class (got {n_per_class})")
    if noise_sigma < 0:
        raise ConfigurationError(f"noise must be nonnegative (got {noise_sigma})")
    centers = separation * simplex_etf(num_classes, input_dim, seed=seed).data
    labels = np.repeat(np.arange(num_classes), n_per_class)
    rng = np.random.default_rng([seed, 1])
    noise = noise_sigma * rng.standard_normal((input_dim, labels.size))
    return FeatureMatrix(centers[:, labels] + noise, labels, num_classes)


def blobs_split(
    num_classes: int,
    input_dim: int,
    n_per_class: int,
    separation: float,
    noise_sigma: float,
    seed: int,
) -> Tuple[Dataset, Dataset]:
    """Train / test blob datasets sharing centers, drawn with independent noise."""
    train = make_blobs(num_classes, input_dim, n_per_class, separation, noise_sigma, seed)
    centers = separation * simplex_etf(num_classes, input_dim, seed=seed).data
    labels = np.repeat(np.arange(num_classes), n_per_class)
    rng = np.random.default_rng([seed, 2])
    test_inputs = centers[:, labels] + noise_sigma * rng.standard_normal((input_dim, labels.size))
    return (
        Dataset(np.ascontiguousarray(train.data.T), train.labels.copy(), num_classes),
        Dataset(np.ascontiguousarray(test_inputs.T), labels, num_classes),
    )


def make_modadd(modulus: int, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """All (a, b) pairs as concatenated one-hots, label (a + b) mod p, floor split."""
    if modulus < 2:
        raise ConfigurationError(f"modulus must be at least 2 (got {modulus})")
    if not 0.0 < train_fraction < 1.0:
        raise ConfigurationError(f"train_fraction must lie in (0, 1) (got {train_fraction})")
    a, b = np.divmod(np.arange(modulus * modulus), modulus)
    inputs = np.zeros((a.size, 2 * modulus))
    inputs[np.arange(a.size), a] = 1.0
    inputs[np.arange(a.size), modulus + b] = 1.0
    labels = (a + b) % modulus

    order = np.random.default_rng(seed).permutation(a.size)
    cut = math.floor(train_fraction * a.size)
    full = Dataset(inputs, labels, modulus)
    return full.subset(np.sort(order[:cut])), full.subset(np.sort(order[cut:]))


def augment(inputs: np.ndarray, magnitude: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian-noise view of a batch; weak and strong views differ only in magnitude."""
    return inputs + magnitude * rng.standard_normal(inputs.shape)


__all__ = ["Dataset", "augment", "blobs_split", "make_blobs", "make_modadd"]
