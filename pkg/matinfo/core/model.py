"""
Multi-layer perceptron with a linear or cosine classifier head.

ReLU follows every hidden layer except the last; the last hidden layer's
linear output is the representation f fed to the metrics. Inputs are
sample-major (N x d_in), weights are stored (out x in) like the classifier
W in R^{C x d}.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from matinfo.common.errors import ArchitectureMismatchError, DataInvariantError, NonFiniteActivationError
from matinfo.core.linalg import FeatureMatrix

HEAD_WEIGHT = "head.weight"
HEAD_BIAS = "head.bias"

# Cosine head: rows below this norm are treated as having this norm.
_COSINE_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class Architecture:
    input_dim: int
    hidden: Tuple[int, ...]
    num_classes: int
    head: str = "linear"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(int(width) for width in self.hidden))

    @property
    def feature_dim(self) -> int:
        return self.hidden[-1]

    def layer_shapes(self) -> List[Tuple[str, Tuple[int, ...]]]:
        shapes: List[Tuple[str, Tuple[int, ...]]] = []
        fan_in = self.input_dim
        for index, width in enumerate(self.hidden):
            shapes.append((f"hidden{index}.weight", (width, fan_in)))
            shapes.append((f"hidden{index}.bias", (width,)))
            fan_in = width
        shapes.append((HEAD_WEIGHT, (self.num_classes, fan_in)))
        if self.head == "linear":
            shapes.append((HEAD_BIAS, (self.num_classes,)))
        return shapes

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["hidden"] = list(self.hidden)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Architecture":
        return cls(
            input_dim=int(data["input_dim"]),
            hidden=tuple(data["hidden"]),
            num_classes=int(data["num_classes"]),
            head=str(data.get("head", "linear")),
        )


class ModelParams:
    """Named parameter tensors consistent with an Architecture."""

    def __init__(self, architecture: Architecture, layers: Dict[str, np.ndarray]) -> None:
        expected = architecture.layer_shapes()
        if [name for name, _ in expected] != list(layers):
            raise DataInvariantError(
                f"layer names {list(layers)} do not match architecture {[name for name, _ in expected]}"
            )
        for name, shape in expected:
            if layers[name].shape != shape:
                raise DataInvariantError(f"layer {name} has shape {layers[name].shape}, expected {shape}")
            if not np.all(np.isfinite(layers[name])):
                raise DataInvariantError(f"layer {name} contains non-finite entries")
        self.architecture = architecture
        self.layers = {name: np.asarray(value, dtype=np.float64) for name, value in layers.items()}

    @classmethod
    def initialize(cls, architecture: Architecture, seed: int, bias_std: float = 0.0) -> "ModelParams":
        """He-normal weights with the classifier rows centered.

        Hidden biases are zero, or N(0, bias_std^2) when `bias_std` > 0. The
        head bias is always zero.
        """
        rng = np.random.default_rng(seed)
        bias_rng = np.random.default_rng([seed, 7])
        layers: Dict[str, np.ndarray] = {}
        for name, shape in architecture.layer_shapes():
            if name == HEAD_BIAS or (name.endswith(".bias") and bias_std == 0.0):
                layers[name] = np.zeros(shape)
            elif name.endswith(".bias"):
                layers[name] = bias_std * bias_rng.standard_normal(shape)
            else:
                layers[name] = rng.standard_normal(shape) * np.sqrt(2.0 / shape[1])
        # Softmax ignores a shift shared by all rows and CE gradients keep the
        # row sum fixed, so a centered head stays centered under SGD.
        head = layers[HEAD_WEIGHT]
        layers[HEAD_WEIGHT] = head - head.mean(axis=0, keepdims=True)
        return cls(architecture, layers)

    def __iter__(self) -> Iterator[Tuple[str, np.ndarray]]:
        return iter(self.layers.items())

    def copy(self) -> "ModelParams":
        return ModelParams(self.architecture, {name: value.copy() for name, value in self.layers.items()})

    def classifier_weights(self) -> FeatureMatrix:
        """W^T as a d x C FeatureMatrix (one column per class, bias excluded)."""
        return FeatureMatrix(self.layers[HEAD_WEIGHT].T)


def require_same_architecture(first: ModelParams, second: ModelParams) -> None:
    if first.architecture != second.architecture:
        raise ArchitectureMismatchError(
            f"architectures differ: {first.architecture} vs {second.architecture}"
        )


def interpolate_params(first: ModelParams, second: ModelParams, omega: float) -> ModelParams:
    """(1 - omega) * first + omega * second; the endpoints are returned exactly."""
    require_same_architecture(first, second)
    if omega == 0.0:
        return first.copy()
    if omega == 1.0:
        return second.copy()
    return ModelParams(
        first.architecture,
        {name: (1.0 - omega) * value + omega * second.layers[name] for name, value in first},
    )


@dataclass
class ForwardResult:
    features: np.ndarray
    logits: np.ndarray
    probabilities: np.ndarray
    activations: List[np.ndarray]
    pre_activations: List[np.ndarray]


def softmax(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    scaled = logits / temperature
    scaled = scaled - scaled.max(axis=1, keepdims=True)
    exp = np.exp(scaled)
    return exp / exp.sum(axis=1, keepdims=True)


def _row_normalize(array: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.maximum(np.linalg.norm(array, axis=1, keepdims=True), _COSINE_NORM_FLOOR)
    return array / norms, norms


def forward(params: ModelParams, inputs: np.ndarray, temperature: float = 1.0) -> ForwardResult:
    """Features, logits and softmax(logits / temperature) for a batch of rows."""
    if not temperature > 0:
        raise DataInvariantError(f"temperature must be positive (got {temperature})")
    architecture = params.architecture
    activations = [np.asarray(inputs, dtype=np.float64)]
    pre_activations: List[np.ndarray] = []
    depth = len(architecture.hidden)
    for index in range(depth):
        z = activations[-1] @ params.layers[f"hidden{index}.weight"].T + params.layers[f"hidden{index}.bias"]
        pre_activations.append(z)
        activations.append(np.maximum(z, 0.0) if index < depth - 1 else z)
    features = activations[-1]

    weight = params.layers[HEAD_WEIGHT]
    if architecture.head == "cosine":
        unit_features, _ = _row_normalize(features)
        unit_weight, _ = _row_normalize(weight)
        logits = unit_features @ unit_weight.T
    else:
        logits = features @ weight.T + params.layers[HEAD_BIAS]
    if not (np.all(np.isfinite(features)) and np.all(np.isfinite(logits))):
        raise NonFiniteActivationError("forward pass produced non-finite activations")
    return ForwardResult(features, logits, softmax(logits, temperature), activations, pre_activations)


def _normalize_rows_backward(raw: np.ndarray, grad_unit: np.ndarray) -> np.ndarray:
    unit, norms = _row_normalize(raw)
    radial = np.sum(unit * grad_unit, axis=1, keepdims=True)
    return (grad_unit - unit * radial) / norms


def backward(
    params: ModelParams,
    result: ForwardResult,
    grad_logits: np.ndarray,
    grad_features: Optional[np.ndarray] = None,
    grad_head_weight: Optional[np.ndarray] = None,
) -> Dict[str, np.ndarray]:
    """Parameter gradients from d(loss)/d(logits) plus optional extra terms.

    `grad_features` (N x d) enters at the representation, `grad_head_weight`
    (C x d) is added to the classifier weight gradient.
    """
    architecture = params.architecture
    features = result.features
    weight = params.layers[HEAD_WEIGHT]
    grads: Dict[str, np.ndarray] = {}

    if architecture.head == "cosine":
        unit_features, _ = _row_normalize(features)
        unit_weight, _ = _row_normalize(weight)
        d_features = _normalize_rows_backward(features, grad_logits @ unit_weight)
        grads[HEAD_WEIGHT] = _normalize_rows_backward(weight, grad_logits.T @ unit_features)
    else:
        d_features = grad_logits @ weight
        grads[HEAD_WEIGHT] = grad_logits.T @ features
        grads[HEAD_BIAS] = grad_logits.sum(axis=0)
    if grad_head_weight is not None:
        grads[HEAD_WEIGHT] = grads[HEAD_WEIGHT] + grad_head_weight
    if grad_features is not None:
        d_features = d_features + grad_features

    delta = d_features
    for index in reversed(range(len(architecture.hidden))):
        if index < len(architecture.hidden) - 1:
            delta = delta * (result.pre_activations[index] > 0)
        grads[f"hidden{index}.weight"] = delta.T @ result.activations[index]
        grads[f"hidden{index}.bias"] = delta.sum(axis=0)
        delta = delta @ params.layers[f"hidden{index}.weight"]

    return {name: grads[name] for name, _ in architecture.layer_shapes()}


__all__ = [
    "Architecture",
    "ForwardResult",
    "HEAD_BIAS",
    "HEAD_WEIGHT",
    "ModelParams",
    "backward",
    "forward",
    "interpolate_params",
    "require_same_architecture",
    "softmax",
]
