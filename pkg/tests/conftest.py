"""Shared fixtures for the matinfo test suite."""

from __future__ import annotations

import os
import sys

import numpy as np
import pytest

# Ensure project root is on sys.path
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from matinfo.core.collapse import simplex_etf  # noqa: E402
from matinfo.core.linalg import FeatureMatrix  # noqa: E402
from matinfo.core.train_config import DatasetConfig, OptimizerConfig, TrainConfig  # noqa: E402


@pytest.fixture(autouse=True)
def _single_thread(monkeypatch):
    monkeypatch.setenv("MATINFO_THREADS", "1")
    monkeypatch.delenv("MATINFO_LOG_LEVEL", raising=False)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def etf10() -> FeatureMatrix:
    return simplex_etf(10, 64, seed=0)


@pytest.fixture
def random_features(rng) -> FeatureMatrix:
    return FeatureMatrix(rng.standard_normal((6, 8)))


@pytest.fixture
def small_config() -> TrainConfig:
    return TrainConfig(
        dataset=DatasetConfig(kind="blobs", num_classes=3, input_dim=4, n_per_class=20, separation=4.0, noise=0.5),
        optimizer=OptimizerConfig(kind="sgd", lr=0.05),
        batch_size=16,
        steps=6,
        eval_interval=3,
        hidden=(16, 8),
        seed=3,
    )
