"""
Training configuration records.

Each record validates itself on construction and round-trips through
plain dictionaries so it can be embedded in checkpoint documents.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple

from matinfo.common.constants import DEFAULT_HIDDEN_WIDTH
from matinfo.common.errors import ConfigurationError

DATASET_KINDS = ("blobs", "modadd")
LOSS_KINDS = ("ce", "ce+mi", "ce+hd", "ce+cma")
OPTIMIZER_KINDS = ("sgd", "adamw")
HEAD_KINDS = ("linear", "cosine")


@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "blobs"
    num_classes: int = 3
    input_dim: int = 16
    n_per_class: int = 100
    separation: float = 4.0
    noise: float = 1.0
    modulus: int = 113
    train_fraction: float = 0.3

    def __post_init__(self) -> None:
        if self.kind not in DATASET_KINDS:
            raise ConfigurationError(f"unknown dataset {self.kind!r}; choose from {DATASET_KINDS}")
        if self.kind == "blobs":
            if self.num_classes < 2:
                raise ConfigurationError(f"blobs need at least 2 classes (got {self.num_classes})")
            if self.n_per_class < 2:
                raise ConfigurationError(f"blobs need at least 2 samples per class (got {self.n_per_class})")
            if self.noise < 0:
                raise ConfigurationError(f"noise must be nonnegative (got {self.noise})")
        else:
            if self.modulus < 2:
                raise ConfigurationError(f"modulus must be at least 2 (got {self.modulus})")
            if not 0.0 < self.train_fraction < 1.0:
                raise ConfigurationError(f"train_fraction must lie in (0, 1) (got {self.train_fraction})")

    @property
    def classes(self) -> int:
        return self.num_classes if self.kind == "blobs" else self.modulus

    @property
    def features_in(self) -> int:
        return self.input_dim if self.kind == "blobs" else 2 * self.modulus


@dataclass(frozen=True)
class LossConfig:
    kind: str = "ce"
    weight: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ConfigurationError(f"unknown loss {self.kind!r}; choose from {LOSS_KINDS}")
        if self.weight < 0:
            raise ConfigurationError(f"loss weight must be nonnegative (got {self.weight})")
        if self.kind == "ce+cma" and self.weight > 1:
            raise ConfigurationError(f"ce+cma weight is a convex combination and must lie in [0, 1] (got {self.weight})")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sgd"
    lr: float = 0.03
    weight_decay: float = 5e-4
    momentum: float = 0.9
    betas: Tuple[float, float] = (0.9, 0.98)

    def __post_init__(self) -> None:
        if self.kind not in OPTIMIZER_KINDS:
            raise ConfigurationError(f"unknown optimizer {self.kind!r}; choose from {OPTIMIZER_KINDS}")
        if self.lr <= 0:
            raise ConfigurationError(f"learning rate must be positive (got {self.lr})")
        if self.weight_decay < 0:
            raise ConfigurationError(f"weight decay must be nonnegative (got {self.weight_decay})")
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))


@dataclass(frozen=True)
class TrainConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    temperature: float = 1.0
    batch_size: int = 64
    steps: int = 1000
    eval_interval: int = 100
    hidden: Tuple[int, ...] = (DEFAULT_HIDDEN_WIDTH, DEFAULT_HIDDEN_WIDTH)
    head: str = "linear"
    bias_std: float = 0.0
    seed: int = 0
    data_seed: Optional[int] = None
    unlabeled_batch: int = 0
    pseudo_label_threshold: float = 0.95
    info_grad_to_head: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(int(width) for width in self.hidden))
        if not self.temperature > 0:
            raise ConfigurationError(f"temperature must be positive (got {self.temperature})")
        if self.batch_size < 0:
            raise ConfigurationError(f"batch size must be nonnegative (got {self.batch_size}); 0 means full batch")
        if self.steps < 0:
            raise ConfigurationError(f"steps must be nonnegative (got {self.steps})")
        if self.eval_interval < 1:
            raise ConfigurationError(f"eval interval must be positive (got {self.eval_interval})")
        if not self.hidden or any(width < 1 for width in self.hidden):
            raise ConfigurationError(f"hidden widths must be positive (got {self.hidden})")
        if self.head not in HEAD_KINDS:
            raise ConfigurationError(f"unknown head {self.head!r}; choose from {HEAD_KINDS}")
        if self.bias_std < 0:
            raise ConfigurationError(f"bias_std must be nonnegative (got {self.bias_std})")
        if self.unlabeled_batch < 0:
            raise ConfigurationError(f"unlabeled batch must be nonnegative (got {self.unlabeled_batch})")
        if self.unlabeled_batch and self.dataset.kind != "blobs":
            raise ConfigurationError("the unlabeled hook is only available for blobs")
        if not 0.0 < self.pseudo_label_threshold < 1.0:
            raise ConfigurationError(
                f"pseudo-label threshold must lie in (0, 1) (got {self.pseudo_label_threshold})"
            )

    @property
    def order_seed(self) -> int:
        return self.seed if self.data_seed is None else self.data_seed

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["hidden"] = list(self.hidden)
        data["optimizer"]["betas"] = list(self.optimizer.betas)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        try:
            values = dict(data)
            values["dataset"] = DatasetConfig(**values.get("dataset", {}))
            values["loss"] = LossConfig(**values.get("loss", {}))
            values["optimizer"] = OptimizerConfig(**values.get("optimizer", {}))
            if "hidden" in values:
                values["hidden"] = tuple(values["hidden"])
            return cls(**values)
        except TypeError as exc:
            raise ConfigurationError(f"invalid training configuration: {exc}") from exc


__all__ = [
    "DATASET_KINDS",
    "DatasetConfig",
    "HEAD_KINDS",
    "LOSS_KINDS",
    "LossConfig",
    "OPTIMIZER_KINDS",
    "OptimizerConfig",
    "TrainConfig",
]
