"""
Checkpoint documents.

A checkpoint is one JSON object:

    {"format": "matinfo-checkpoint", "version": 1,
     "architecture": {...}, "layers": [{"name", "shape", "dtype", "data"}],
     "config": {...}, "step": int, "rng_digest": str}

Layer payloads are base64 of little-endian float64 in row-major order, so
parameters round-trip bit-exactly.
"""

import base64
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from matinfo.common.constants import CHECKPOINT_FORMAT, CHECKPOINT_VERSION
from matinfo.common.errors import CheckpointFormatError, ConfigurationError, DataInvariantError
from matinfo.common.logging_config import get_logger
from matinfo.core.model import Architecture, ModelParams
from matinfo.core.train_config import TrainConfig

_log = get_logger(__name__)

_DTYPE = "<f8"


def rng_digest(rng: np.random.Generator) -> str:
    """sha256 of the generator's serialized bit-generator state."""
    state = json.dumps(rng.bit_generator.state, sort_keys=True, default=str)
    return hashlib.sha256(state.encode("utf-8")).hexdigest()


@dataclass
class Checkpoint:
    params: ModelParams
    config: TrainConfig
    step: int
    rng_digest: str

    def to_dict(self) -> Dict[str, Any]:
        layers = []
        for name, value in self.params:
            payload = np.ascontiguousarray(value, dtype=_DTYPE).tobytes()
            layers.append({
                "name": name,
                "shape": list(value.shape),
                "dtype": _DTYPE,
                "data": base64.b64encode(payload).decode("ascii"),
            })
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "architecture": self.params.architecture.to_dict(),
            "layers": layers,
            "config": self.config.to_dict(),
            "step": self.step,
            "rng_digest": self.rng_digest,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Checkpoint":
        if not isinstance(data, dict):
            raise CheckpointFormatError("checkpoint must be a JSON object")
        if data.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointFormatError(f"not a matinfo checkpoint (format={data.get('format')!r})")
        if data.get("version") != CHECKPOINT_VERSION:
            raise CheckpointFormatError(f"unsupported checkpoint version {data.get('version')!r}")
        try:
            architecture = Architecture.from_dict(data["architecture"])
            layers: Dict[str, np.ndarray] = {}
            for index, entry in enumerate(data["layers"]):
                if entry.get("dtype") != _DTYPE:
                    raise CheckpointFormatError(f"layer {index} has unsupported dtype {entry.get('dtype')!r}")
                raw = base64.b64decode(entry["data"], validate=True)
                shape = tuple(int(n) for n in entry["shape"])
                layers[entry["name"]] = np.frombuffer(raw, dtype=_DTYPE).astype(np.float64).reshape(shape)
            params = ModelParams(architecture, layers)
            config = TrainConfig.from_dict(data["config"])
            step = int(data["step"])
            digest = str(data["rng_digest"])
        except CheckpointFormatError:
            raise
        except (KeyError, TypeError, ValueError, DataInvariantError, ConfigurationError) as exc:
            raise CheckpointFormatError(f"checkpoint is invalid: {exc}") from exc
        return cls(params=params, config=config, step=step, rng_digest=digest)

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                json.dump(self.to_dict(), f, indent=2)
                f.write("\n")
        except OSError as exc:
            raise CheckpointFormatError(f"cannot write checkpoint {path}: {exc.strerror or exc}") from exc
        _log.info("Wrote checkpoint (step %d) to %s", self.step, path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Checkpoint":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError as exc:
            raise CheckpointFormatError(f"checkpoint {path} does not exist") from exc
        except OSError as exc:
            raise CheckpointFormatError(f"cannot read checkpoint {path}: {exc.strerror or exc}") from exc
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CheckpointFormatError(f"checkpoint {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


__all__ = ["Checkpoint", "rng_digest"]
