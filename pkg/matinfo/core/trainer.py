"""
Deterministic desk-scale training with matrix-information tracking.

* `train` runs the composite objective (ce, ce+mi, ce+hd, ce+cma)
* `evaluate` is the single evaluation path (logging, interpolation, CLI)
* `interpolate` sweeps straight lines between two checkpoints
* `pseudo_label_filter` selects confident unlabeled samples
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from matinfo.common.config import MatinfoSettings, limited_threads
from matinfo.common.constants import DEFAULT_EVAL_BATCH
from matinfo.common.errors import ConfigurationError, DivergedLossError
from matinfo.common.logging_config import get_logger
from matinfo.core.checkpoint import Checkpoint, rng_digest
from matinfo.core.datasets import Dataset, augment, blobs_split, make_modadd
from matinfo.core.linalg import FeatureMatrix, gram
from matinfo.core.losses import LossValueAndGrad, cma_loss, hd_loss, mi_loss
from matinfo.core.matrix_io import MetricsLog
from matinfo.core.metrics import InformationSummary, MetricRecord, information_summary
from matinfo.core.model import (
    Architecture,
    ForwardResult,
    ModelParams,
    backward,
    forward,
    interpolate_params,
    require_same_architecture,
)
from matinfo.core.train_config import DatasetConfig, TrainConfig

_log = get_logger(__name__)

# Noise magnitudes of the two unlabeled views, relative to the blob noise.
WEAK_AUGMENT = 0.1
STRONG_AUGMENT = 0.5

ADAM_EPS = 1e-8


def load_datasets(dataset: DatasetConfig, seed: int) -> Tuple[Dataset, Dataset]:
    """Train and test splits for a dataset configuration."""
    if dataset.kind == "blobs":
        return blobs_split(
            dataset.num_classes,
            dataset.input_dim,
            dataset.n_per_class,
            dataset.separation,
            dataset.noise,
            seed,
        )
    return make_modadd(dataset.modulus, dataset.train_fraction, seed)


def architecture_for(config: TrainConfig) -> Architecture:
    return Architecture(
        input_dim=config.dataset.features_in,
        hidden=config.hidden,
        num_classes=config.dataset.classes,
        head=config.head,
    )


def cross_entropy(logits: np.ndarray, labels: np.ndarray, temperature: float) -> Tuple[float, np.ndarray]:
    """Mean CE of softmax(logits / temperature) and its gradient w.r.t. the logits."""
    scaled = logits / temperature
    log_norm = logsumexp(scaled, axis=1)
    rows = np.arange(labels.size)
    value = float(np.mean(log_norm - scaled[rows, labels]))
    grad = np.exp(scaled - log_norm[:, None])
    grad[rows, labels] -= 1.0
    return value, grad / (labels.size * temperature)


def cosine_lr(base: float, step: int, total: int) -> float:
    """Cosine annealing from `base` at step 0 towards 0 at `total`."""
    if total <= 0:
        return base
    return 0.5 * base * (1.0 + math.cos(math.pi * step / total))


class SgdOptimizer:
    """Heavy-ball SGD with coupled weight decay."""

    def __init__(self, lr: float, momentum: float, weight_decay: float) -> None:
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self._velocity: Dict[str, np.ndarray] = {}

    def step(self, params: ModelParams, grads: Dict[str, np.ndarray], lr: float) -> None:
        for name, value in params:
            grad = grads[name] + self.weight_decay * value
            velocity = self._velocity.get(name)
            velocity = grad if velocity is None else self.momentum * velocity + grad
            self._velocity[name] = velocity
            value -= lr * velocity


class AdamWOptimizer:
    """Adam with decoupled weight decay."""

    def __init__(self, lr: float, betas: Tuple[float, float], weight_decay: float) -> None:
        self.lr = lr
        self.betas = betas
        self.weight_decay = weight_decay
        self._first: Dict[str, np.ndarray] = {}
        self._second: Dict[str, np.ndarray] = {}
        self._count = 0

    def step(self, params: ModelParams, grads: Dict[str, np.ndarray], lr: float) -> None:
        beta1, beta2 = self.betas
        self._count += 1
        for name, value in params:
            grad = grads[name]
            first = beta1 * self._first.get(name, np.zeros_like(value)) + (1.0 - beta1) * grad
            second = beta2 * self._second.get(name, np.zeros_like(value)) + (1.0 - beta2) * grad * grad
            self._first[name] = first
            self._second[name] = second
            first_hat = first / (1.0 - beta1 ** self._count)
            second_hat = second / (1.0 - beta2 ** self._count)
            value -= lr * (first_hat / (np.sqrt(second_hat) + ADAM_EPS) + self.weight_decay * value)


def build_optimizer(config: TrainConfig):
    opt = config.optimizer
    if opt.kind == "sgd":
        return SgdOptimizer(opt.lr, opt.momentum, opt.weight_decay)
    return AdamWOptimizer(opt.lr, opt.betas, opt.weight_decay)


def eval_indices(size: int, seed: int, limit: int = DEFAULT_EVAL_BATCH) -> np.ndarray:
    """Fixed seeded subset used for batch-level metric estimates."""
    if size <= limit:
        return np.arange(size)
    return np.sort(np.random.default_rng([seed, 3]).choice(size, size=limit, replace=False))


@dataclass(frozen=True)
class Evaluation:
    """Accuracy and loss over a split plus information metrics on its eval batch."""

    accuracy: float
    loss: float
    information: InformationSummary

    def to_record(self, step: int, split: str) -> MetricRecord:
        info = self.information
        return MetricRecord(
            step=step,
            split=split,
            h_feat=info.h1,
            h_weights=info.h2,
            mi=info.mi,
            mir=info.mir,
            hdr=info.hdr,
            accuracy=self.accuracy,
            loss=self.loss,
        )


def evaluate(
    params: ModelParams,
    dataset: Dataset,
    temperature: float,
    seed: int = 0,
) -> Evaluation:
    """Evaluate a model on a split.

    Accuracy and loss cover the whole split. MI / MIR / HDR compare G(f)
    with G(V), V_i = w_{y_i}, on the `eval_indices(len(dataset), seed)`
    batch. The classifier bias is excluded.
    """
    result = forward(params, dataset.inputs, temperature)
    loss, _ = cross_entropy(result.logits, dataset.labels, temperature)
    accuracy = float(np.mean(np.argmax(result.logits, axis=1) == dataset.labels))

    rows = eval_indices(len(dataset), seed)
    labels = dataset.labels[rows]
    features = FeatureMatrix(result.features[rows].T, labels, dataset.num_classes)
    weights = FeatureMatrix(params.classifier_weights().data[:, labels])
    information = information_summary(gram(features), gram(weights))
    return Evaluation(accuracy=accuracy, loss=loss, information=information)


@dataclass(frozen=True)
class PseudoLabelSelection:
    """Confident unlabeled samples; `empty` flags a step with nothing kept."""

    indices: np.ndarray
    labels: np.ndarray
    features: np.ndarray

    @property
    def empty(self) -> bool:
        return self.indices.size == 0


def pseudo_label_filter(
    params: ModelParams,
    inputs: np.ndarray,
    threshold: float,
    temperature: float = 1.0,
) -> PseudoLabelSelection:
    """Keep samples whose max class probability strictly exceeds `threshold`."""
    result = forward(params, inputs, temperature)
    confidence = result.probabilities.max(axis=1)
    kept = np.flatnonzero(confidence > threshold)
    if kept.size == 0:
        _log.debug("No unlabeled sample exceeded the %.3f confidence threshold", threshold)
    return PseudoLabelSelection(
        indices=kept,
        labels=np.argmax(result.probabilities[kept], axis=1) if kept.size else np.zeros(0, dtype=np.int64),
        features=result.features[kept],
    )


def _batches(size: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    if batch_size == 0 or batch_size >= size:
        while True:
            yield np.arange(size)
    while True:
        order = rng.permutation(size)
        for start in range(0, size - batch_size + 1, batch_size):
            yield order[start : start + batch_size]


def _information_term(
    kind: str,
    weight: float,
    result: ForwardResult,
    labels: np.ndarray,
    params: ModelParams,
) -> LossValueAndGrad:
    features = FeatureMatrix(result.features.T, labels, params.architecture.num_classes)
    weights = params.classifier_weights()
    if kind == "ce+mi":
        return mi_loss(features, weights, weight)
    if kind == "ce+hd":
        return hd_loss(features, weights, weight)
    term = cma_loss(features, weights)
    return LossValueAndGrad(weight * term.value, weight * term.grad_features, weight * term.grad_weights)


class Trainer:
    """One training run: parameters, optimizer and data order for a TrainConfig."""

    def __init__(self, config: TrainConfig) -> None:
        self.config = config
        self.train_set, self.test_set = load_datasets(config.dataset, config.seed)
        self.params = ModelParams.initialize(architecture_for(config), config.seed, config.bias_std)
        self.optimizer = build_optimizer(config)
        self.order_rng = np.random.default_rng(config.order_seed)
        self.unlabeled_rng = np.random.default_rng([config.order_seed, 5])
        self._batches = _batches(len(self.train_set), config.batch_size, self.order_rng)

    def evaluate_split(self, split: str) -> Evaluation:
        dataset = self.train_set if split == "train" else self.test_set
        return evaluate(self.params, dataset, self.config.temperature, self.config.seed)

    def record(self, step: int, log: MetricsLog) -> None:
        for split in ("train", "test"):
            record = self.evaluate_split(split).to_record(step, split)
            log.append(record)
        _log.info(
            "step %d: train acc %.4f, h_feat %.4f, mir %s, hdr %.4f",
            step,
            log.records[-2].accuracy,
            log.records[-2].h_feat,
            "null" if log.records[-2].mir is None else f"{log.records[-2].mir:.4f}",
            log.records[-2].hdr,
        )

    def _unlabeled_term(self) -> Tuple[float, Optional[Dict[str, np.ndarray]]]:
        config = self.config
        size = min(config.unlabeled_batch, len(self.train_set))
        rows = self.unlabeled_rng.choice(len(self.train_set), size=size, replace=False)
        inputs = self.train_set.inputs[rows]
        noise = config.dataset.noise
        weak = augment(inputs, WEAK_AUGMENT * noise, self.unlabeled_rng)
        strong = augment(inputs, STRONG_AUGMENT * noise, self.unlabeled_rng)
        selection = pseudo_label_filter(self.params, weak, config.pseudo_label_threshold, config.temperature)
        if selection.empty:
            return 0.0, None
        result = forward(self.params, strong[selection.indices], config.temperature)
        term = _information_term(config.loss.kind, config.loss.weight, result, selection.labels, self.params)
        grads = backward(
            self.params,
            result,
            np.zeros_like(result.logits),
            grad_features=term.grad_features.T,
            grad_head_weight=term.grad_weights.T if config.info_grad_to_head else None,
        )
        return term.value, grads

    def step(self, step: int) -> float:
        """One optimizer update; returns the composite loss of the batch."""
        config = self.config
        batch = self.train_set.subset(next(self._batches))
        result = forward(self.params, batch.inputs, config.temperature)
        ce, grad_logits = cross_entropy(result.logits, batch.labels, config.temperature)

        kind = config.loss.kind
        ce_scale = 1.0 - config.loss.weight if kind == "ce+cma" else 1.0
        total = ce_scale * ce
        grad_features = None
        grad_head = None
        if kind != "ce":
            term = _information_term(kind, config.loss.weight, result, batch.labels, self.params)
            total += term.value
            grad_features = term.grad_features.T
            if config.info_grad_to_head:
                grad_head = term.grad_weights.T
        grads = backward(self.params, result, ce_scale * grad_logits, grad_features, grad_head)

        if config.unlabeled_batch and kind in ("ce+mi", "ce+hd"):
            value, extra = self._unlabeled_term()
            total += value
            if extra is not None:
                grads = {name: grads[name] + extra[name] for name in grads}

        if not math.isfinite(total):
            raise DivergedLossError(step, total)
        lr = cosine_lr(config.optimizer.lr, step, config.steps)
        self.optimizer.step(self.params, grads, lr)
        _log.debug("step %d: loss %.6f, lr %.6f", step, total, lr)
        return total

    def checkpoint(self, step: int) -> Checkpoint:
        return Checkpoint(
            params=self.params.copy(),
            config=self.config,
            step=step,
            rng_digest=rng_digest(self.order_rng),
        )


def train(
    config: TrainConfig,
    log: Optional[MetricsLog] = None,
    settings: Optional[MatinfoSettings] = None,
) -> Checkpoint:
    """Run a full training job and return its final checkpoint.

    Metrics are appended to `log` at step 0, every `eval_interval` steps and
    at the last step, for both splits.
    """
    log = log if log is not None else MetricsLog()
    with limited_threads(settings) as threads:
        _log.info("Training %s / %s for %d steps (%d thread(s))", config.dataset.kind, config.loss.kind, config.steps, threads)
        trainer = Trainer(config)
        trainer.record(0, log)
        for step in range(config.steps):
            trainer.step(step)
            done = step + 1
            if done % config.eval_interval == 0 or done == config.steps:
                trainer.record(done, log)
        return trainer.checkpoint(config.steps)


@dataclass(frozen=True)
class InterpolationPoint:
    omega: float
    evaluation: Evaluation

    @property
    def accuracy(self) -> float:
        return self.evaluation.accuracy

    @property
    def mir(self) -> Optional[float]:
        return self.evaluation.information.mir

    @property
    def hdr(self) -> float:
        return self.evaluation.information.hdr


def omega_grid(steps: int) -> List[float]:
    """steps + 1 evenly spaced weights from 0 to 1 inclusive."""
    if steps < 1:
        raise ConfigurationError(f"interpolation needs at least one step (got {steps})")
    return [index / steps for index in range(steps + 1)]


def interpolate(
    first: Checkpoint,
    second: Checkpoint,
    omegas: Sequence[float],
    dataset: Dataset,
    temperature: Optional[float] = None,
    settings: Optional[MatinfoSettings] = None,
) -> List[InterpolationPoint]:
    """Evaluate (1 - omega) * first + omega * second for every omega.

    Points are evaluated in parallel (MATINFO_THREADS workers) and returned
    sorted by omega.
    """
    require_same_architecture(first.params, second.params)
    for omega in omegas:
        if not 0.0 <= omega <= 1.0:
            raise ConfigurationError(f"interpolation weight {omega} is outside [0, 1]")
    temperature = first.config.temperature if temperature is None else temperature
    seed = first.config.seed

    def run(omega: float) -> InterpolationPoint:
        params = interpolate_params(first.params, second.params, omega)
        return InterpolationPoint(omega, evaluate(params, dataset, temperature, seed))

    settings = settings or MatinfoSettings()
    with limited_threads(settings) as threads:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(run, sorted(omegas)))
    return points


__all__ = [
    "AdamWOptimizer",
    "Evaluation",
    "InterpolationPoint",
    "PseudoLabelSelection",
    "SgdOptimizer",
    "Trainer",
    "architecture_for",
    "cosine_lr",
    "cross_entropy",
    "eval_indices",
    "evaluate",
    "interpolate",
    "load_datasets",
    "omega_grid",
    "pseudo_label_filter",
    "train",
]
