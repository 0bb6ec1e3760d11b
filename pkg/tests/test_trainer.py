"""Tests for datasets, the numpy MLP, checkpoints and the training loop."""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np
import pytest

from matinfo.common.constants import DEFAULT_EVAL_BATCH
from matinfo.common.errors import ArchitectureMismatchError, CheckpointFormatError, ConfigurationError
from matinfo.core.checkpoint import Checkpoint
from matinfo.core.collapse import nc_targets
from matinfo.core.datasets import make_blobs, make_modadd
from matinfo.core.linalg import FeatureMatrix
from matinfo.core.losses import fd_gradient_oracle, relative_error
from matinfo.core.matrix_io import MetricsLog
from matinfo.core.metrics import davies_bouldin, silhouette
from matinfo.core.model import Architecture, ModelParams, backward, forward, interpolate_params
from matinfo.core.train_config import DatasetConfig, LossConfig, OptimizerConfig, TrainConfig
from matinfo.core.trainer import (
    cosine_lr,
    cross_entropy,
    evaluate,
    interpolate,
    load_datasets,
    omega_grid,
    pseudo_label_filter,
    train,
)


def test_make_blobs_without_noise_sits_on_centers():
    blobs = make_blobs(3, 4, 5, separation=2.0, noise_sigma=0.0, seed=1)
    for label in range(3):
        columns = blobs.data[:, blobs.labels == label]
        assert np.allclose(columns, columns[:, :1])
        assert np.linalg.norm(columns[:, 0]) == pytest.approx(2.0)


def test_make_blobs_is_deterministic():
    first = make_blobs(4, 5, 6, 3.0, 1.0, seed=9)
    second = make_blobs(4, 5, 6, 3.0, 1.0, seed=9)
    assert np.array_equal(first.data, second.data)
    assert np.array_equal(first.labels, second.labels)


def test_make_modadd_small_modulus():
    train_set, test_set = make_modadd(5, 0.4, seed=0)
    assert len(train_set) + len(test_set) == 25
    assert len(train_set) == 10
    inputs = np.concatenate([train_set.inputs, test_set.inputs])
    labels = np.concatenate([train_set.labels, test_set.labels])
    row = np.flatnonzero((inputs[:, 2] == 1.0) & (inputs[:, 5 + 4] == 1.0))
    assert labels[row].tolist() == [1]
    assert np.all(inputs.sum(axis=1) == 2.0)


def test_make_modadd_floor_split_is_disjoint():
    train_set, test_set = make_modadd(113, 0.3, seed=0)
    assert len(train_set) == 3830
    assert len(test_set) == 113 * 113 - 3830
    train_rows = {row.tobytes() for row in train_set.inputs}
    assert not any(row.tobytes() in train_rows for row in test_set.inputs)


def test_forward_probabilities(rng):
    params = ModelParams.initialize(Architecture(4, (8, 5), 3), seed=0)
    result = forward(params, rng.standard_normal((10, 4)))
    assert np.allclose(result.probabilities.sum(axis=1), 1.0, atol=1e-9)
    assert result.features.shape == (10, 5)
    hot = forward(params, rng.standard_normal((10, 4)), temperature=1e6)
    assert np.max(np.abs(hot.probabilities - 1.0 / 3.0)) < 1e-3


def test_zero_weight_network_is_uniform(rng):
    architecture = Architecture(3, (4,), 5)
    zero = ModelParams(architecture, {name: np.zeros(shape) for name, shape in architecture.layer_shapes()})
    result = forward(zero, rng.standard_normal((6, 3)))
    assert np.allclose(result.probabilities, 0.2)


def test_initialization_centers_classifier_rows():
    params = ModelParams.initialize(Architecture(4, (8, 6), 5), seed=0)
    assert np.allclose(params.layers["head.weight"].sum(axis=0), 0.0, atol=1e-12)
    for name, value in params:
        if name.endswith(".bias"):
            assert not value.any(), name


def test_bias_std_draws_hidden_biases_only():
    architecture = Architecture(4, (8, 6), 3)
    plain = ModelParams.initialize(architecture, seed=2)
    spread = ModelParams.initialize(architecture, seed=2, bias_std=0.5)
    assert np.array_equal(plain.layers["hidden0.weight"], spread.layers["hidden0.weight"])
    assert np.array_equal(plain.layers["head.weight"], spread.layers["head.weight"])
    assert spread.layers["hidden0.bias"].any()
    assert spread.layers["hidden1.bias"].any()
    assert not spread.layers["head.bias"].any()


def test_sgd_keeps_classifier_rows_centered(small_config):
    checkpoint = train(replace(small_config, bias_std=0.3))
    assert np.allclose(checkpoint.params.layers["head.weight"].sum(axis=0), 0.0, atol=1e-10)


@pytest.mark.parametrize("head", ["linear", "cosine"])
def test_backward_matches_finite_differences(head, rng):
    architecture = Architecture(3, (6, 4), 3, head=head)
    params = ModelParams.initialize(architecture, seed=11)
    inputs = rng.standard_normal((7, 3))
    labels = rng.integers(0, 3, size=7)
    probe = rng.standard_normal((7, 4))

    def objective(p: ModelParams) -> float:
        result = forward(p, inputs, temperature=2.0)
        value, _ = cross_entropy(result.logits, labels, 2.0)
        return value + float(np.sum(probe * result.features))

    result = forward(params, inputs, temperature=2.0)
    _, grad_logits = cross_entropy(result.logits, labels, 2.0)
    grads = backward(params, result, grad_logits, grad_features=probe)
    for name, value in params:
        def perturbed(x, name=name):
            candidate = params.copy()
            candidate.layers[name] = x
            return objective(candidate)
        numeric = fd_gradient_oracle(perturbed, value, 1e-6)
        assert relative_error(grads[name], numeric) < 1e-5, name


def test_interpolate_params_endpoints_are_exact():
    architecture = Architecture(2, (3,), 2)
    first = ModelParams.initialize(architecture, 0)
    second = ModelParams.initialize(architecture, 1)
    for name, value in interpolate_params(first, second, 0.0):
        assert np.array_equal(value, first.layers[name])
    for name, value in interpolate_params(first, second, 1.0):
        assert np.array_equal(value, second.layers[name])
    with pytest.raises(ArchitectureMismatchError):
        interpolate_params(first, ModelParams.initialize(Architecture(2, (4,), 2), 0), 0.5)


def test_pseudo_label_filter_thresholds(rng):
    params = ModelParams.initialize(Architecture(4, (8,), 3), seed=2)
    inputs = rng.standard_normal((12, 4))
    assert pseudo_label_filter(params, inputs, 0.0).indices.size == 12
    empty = pseudo_label_filter(params, inputs, 1.0)
    assert empty.empty


def test_pseudo_label_filter_keeps_confident_samples():
    architecture = Architecture(2, (2,), 2)
    layers = {
        "hidden0.weight": np.eye(2),
        "hidden0.bias": np.zeros(2),
        "head.weight": np.eye(2),
        "head.bias": np.zeros(2),
    }
    params = ModelParams(architecture, layers)
    inputs = np.array([[10.0, 0.0], [0.1, 0.0], [0.0, 10.0], [0.0, 0.0]])
    selection = pseudo_label_filter(params, inputs, 0.9)
    assert selection.indices.tolist() == [0, 2]
    assert selection.labels.tolist() == [0, 1]


def test_train_config_validation():
    with pytest.raises(ConfigurationError):
        LossConfig(kind="ce+cma", weight=1.5)
    with pytest.raises(ConfigurationError):
        TrainConfig(temperature=0.0)
    with pytest.raises(ConfigurationError):
        TrainConfig(dataset=DatasetConfig(kind="modadd"), unlabeled_batch=8)
    with pytest.raises(ConfigurationError):
        OptimizerConfig(kind="rmsprop")
    with pytest.raises(ConfigurationError):
        TrainConfig(bias_std=-0.1)


def test_train_config_round_trip(small_config):
    assert TrainConfig.from_dict(small_config.to_dict()) == small_config


def test_cosine_lr_schedule():
    assert cosine_lr(0.1, 0, 10) == pytest.approx(0.1)
    assert cosine_lr(0.1, 5, 10) == pytest.approx(0.05)
    assert cosine_lr(0.1, 3, 0) == 0.1


def test_zero_step_training_returns_initialization(small_config):
    config = replace(small_config, steps=0)
    log = MetricsLog()
    checkpoint = train(config, log)
    assert checkpoint.step == 0
    assert [(r.step, r.split) for r in log.records] == [(0, "train"), (0, "test")]
    fresh = ModelParams.initialize(checkpoint.params.architecture, config.seed)
    for name, value in checkpoint.params:
        assert np.array_equal(value, fresh.layers[name])


def test_training_is_deterministic(small_config):
    first_log, second_log = MetricsLog(), MetricsLog()
    first = train(small_config, first_log)
    second = train(small_config, second_log)
    assert [r.to_dict() for r in first_log.records] == [r.to_dict() for r in second_log.records]
    assert first.to_dict() == second.to_dict()
    assert [r.step for r in first_log.records if r.split == "train"] == [0, 3, 6]


@pytest.mark.parametrize("kind, weight", [("ce+mi", 0.1), ("ce+hd", 0.1), ("ce+cma", 0.5)])
def test_composite_objectives_train(small_config, kind, weight):
    config = replace(small_config, loss=LossConfig(kind=kind, weight=weight))
    log = MetricsLog()
    checkpoint = train(config, log)
    assert checkpoint.step == small_config.steps
    assert all(np.isfinite(r.loss) for r in log.records)


def test_unlabeled_hook_runs(small_config):
    config = replace(
        small_config,
        loss=LossConfig(kind="ce+mi", weight=0.1),
        unlabeled_batch=12,
        pseudo_label_threshold=0.5,
        optimizer=OptimizerConfig(kind="adamw", lr=1e-3, weight_decay=0.01),
    )
    assert train(config).step == small_config.steps


def test_modadd_full_batch_adamw_run():
    config = TrainConfig(
        dataset=DatasetConfig(kind="modadd", modulus=7, train_fraction=0.3),
        optimizer=OptimizerConfig(kind="adamw", lr=1e-3, weight_decay=1.0),
        batch_size=0,
        steps=4,
        eval_interval=2,
        hidden=(16, 8),
        seed=1,
    )
    log = MetricsLog()
    checkpoint = train(config, log)
    assert checkpoint.step == 4
    assert checkpoint.params.architecture.input_dim == 14
    assert checkpoint.params.architecture.num_classes == 7
    assert [(r.step, r.split) for r in log.records] == [
        (0, "train"), (0, "test"), (2, "train"), (2, "test"), (4, "train"), (4, "test"),
    ]
    for record in log.records:
        values = [record.h_feat, record.h_weights, record.mi, record.hdr, record.accuracy, record.loss]
        assert all(np.isfinite(v) for v in values)
        assert record.mir is None or np.isfinite(record.mir)


def test_cosine_head_and_full_batch(small_config):
    config = replace(small_config, head="cosine", batch_size=0)
    log = MetricsLog()
    train(config, log)
    assert all(0.0 <= r.hdr <= 1.0 for r in log.records)


def test_checkpoint_round_trip_is_bit_exact(tmp_path, small_config):
    checkpoint = train(small_config)
    path = tmp_path / "ckpt.json"
    checkpoint.save(path)
    loaded = Checkpoint.load(path)
    assert loaded.config == small_config
    assert loaded.step == checkpoint.step
    assert loaded.rng_digest == checkpoint.rng_digest
    for name, value in checkpoint.params:
        assert loaded.params.layers[name].tobytes() == value.tobytes()


def test_checkpoint_rejects_foreign_documents(tmp_path):
    path = tmp_path / "other.json"
    path.write_text('{"format": "something-else", "version": 1}', encoding="utf-8")
    with pytest.raises(CheckpointFormatError):
        Checkpoint.load(path)
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(CheckpointFormatError):
        Checkpoint.load(path)


def test_interpolation_endpoints_match_standalone_evaluation(small_config):
    first = train(small_config)
    second = train(replace(small_config, data_seed=99))
    _, test_set = load_datasets(small_config.dataset, small_config.seed)
    points = interpolate(first, second, omega_grid(4), test_set)
    assert [p.omega for p in points] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert points[0].evaluation == evaluate(first.params, test_set, small_config.temperature, small_config.seed)
    assert points[-1].evaluation == evaluate(second.params, test_set, small_config.temperature, small_config.seed)


def test_interpolation_endpoints_match_evaluation_on_large_splits(small_config):
    config = replace(small_config, dataset=replace(small_config.dataset, n_per_class=110))
    first = train(config)
    second = train(replace(config, data_seed=99))
    _, test_set = load_datasets(config.dataset, config.seed)
    assert len(test_set) > DEFAULT_EVAL_BATCH
    points = interpolate(first, second, [0.0, 1.0], test_set)
    assert points[0].evaluation == evaluate(first.params, test_set, config.temperature, config.seed)
    assert points[1].evaluation == evaluate(second.params, test_set, config.temperature, config.seed)


def test_trainer_logs_the_shared_evaluation(small_config):
    config = replace(small_config, dataset=replace(small_config.dataset, n_per_class=110), steps=0)
    log = MetricsLog()
    checkpoint = train(config, log)
    train_set, test_set = load_datasets(config.dataset, config.seed)
    for split, dataset in (("train", train_set), ("test", test_set)):
        expected = evaluate(checkpoint.params, dataset, config.temperature, config.seed).to_record(0, split)
        assert [r for r in log.records if r.split == split] == [expected]


def test_interpolating_a_checkpoint_with_itself_is_constant(small_config):
    checkpoint = train(small_config)
    _, test_set = load_datasets(small_config.dataset, small_config.seed)
    points = interpolate(checkpoint, checkpoint, omega_grid(5), test_set)
    for point in points:
        assert point.accuracy == points[0].accuracy
        assert point.mir == pytest.approx(points[0].mir, abs=1e-9)
        assert point.hdr == pytest.approx(points[0].hdr, abs=1e-9)


def _blob_config(num_classes: int, **overrides) -> TrainConfig:
    values = dict(
        dataset=DatasetConfig(kind="blobs", num_classes=num_classes, input_dim=16, n_per_class=100),
        steps=2000,
        eval_interval=500,
        hidden=(64, 64),
        seed=0,
    )
    values.update(overrides)
    return TrainConfig(**values)


def _final(log: MetricsLog, split: str = "train"):
    return [r for r in log.records if r.split == split][-1]


def _collapse_config(num_classes: int) -> TrainConfig:
    # Tight blobs, correlated features at initialization and enough weight
    # decay for the components the loss ignores to die out within the run.
    return _blob_config(
        num_classes,
        dataset=DatasetConfig(
            kind="blobs", num_classes=num_classes, input_dim=16, n_per_class=100, separation=1.0, noise=0.05
        ),
        optimizer=OptimizerConfig(kind="sgd", lr=0.03, weight_decay=1e-2),
        bias_std=0.5,
        steps=5000,
        eval_interval=1000,
    )


@pytest.mark.slow
@pytest.mark.parametrize("num_classes", [3, 10])
def test_ce_training_moves_towards_collapse(num_classes):
    log = MetricsLog()
    train(_collapse_config(num_classes), log)
    start = [r for r in log.records if r.split == "train"][0]
    end = _final(log)
    assert end.accuracy >= 0.99
    assert end.mir >= 0.8 * nc_targets(num_classes).mir_target
    assert end.hdr <= 0.15
    assert end.h_feat > start.h_feat


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(3))
def test_higher_temperature_compacts_test_features(seed):
    summaries = []
    for temperature in (1.0, 10.0):
        config = _blob_config(10, temperature=temperature, seed=seed)
        log = MetricsLog()
        checkpoint = train(config, log)
        _, test_set = load_datasets(config.dataset, config.seed)
        result = forward(checkpoint.params, test_set.inputs, temperature)
        features = FeatureMatrix(result.features.T, test_set.labels, test_set.num_classes)
        summaries.append((_final(log, "test").h_feat, silhouette(features), davies_bouldin(features)))
    (h_cold, sil_cold, dbi_cold), (h_hot, sil_hot, dbi_hot) = summaries
    assert h_hot < h_cold
    assert sil_hot > sil_cold
    assert dbi_hot < dbi_cold


@pytest.mark.slow
def test_information_terms_shift_metrics_without_hurting_accuracy():
    logs = {}
    for kind, weight in (("ce", 0.0), ("ce+mi", 0.1), ("ce+hd", 0.1)):
        logs[kind] = MetricsLog()
        train(_blob_config(10, loss=LossConfig(kind=kind, weight=weight)), logs[kind])
    base = _final(logs["ce"])
    with_mi = _final(logs["ce+mi"])
    with_hd = _final(logs["ce+hd"])
    assert with_mi.accuracy >= base.accuracy - 0.01
    assert with_hd.accuracy >= base.accuracy - 0.01
    assert with_mi.mi > base.mi
    assert abs(with_hd.h_feat - with_hd.h_weights) < abs(base.h_feat - base.h_weights)


@pytest.mark.slow
def test_shared_initialization_is_linearly_connected():
    config = _blob_config(3, optimizer=OptimizerConfig(kind="adamw", lr=3e-4, weight_decay=0.01))
    first = train(config)
    second = train(replace(config, data_seed=1))
    _, test_set = load_datasets(config.dataset, config.seed)
    points = interpolate(first, second, omega_grid(20), test_set)
    floor = min(points[0].accuracy, points[-1].accuracy)
    assert max(floor - p.accuracy for p in points) < 0.02
    assert points[0].evaluation == evaluate(first.params, test_set, config.temperature, config.seed)
    assert points[-1].evaluation == evaluate(second.params, test_set, config.temperature, config.seed)


def test_training_progress_goes_to_the_module_logger(small_config, caplog):
    caplog.set_level(logging.INFO, logger="matinfo.core.trainer")
    train(small_config)
    messages = [r.getMessage() for r in caplog.records if r.name == "matinfo.core.trainer"]
    assert any(message.startswith("Training blobs / ce") for message in messages)
    assert any(message.startswith("step 6: train acc") for message in messages)
