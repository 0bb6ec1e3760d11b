"""matinfo - matrix information metrics for representation analysis.

Provides:
* Matrix entropy, effective rank, matrix mutual information, MIR and HDR
* Neural Collapse references (simplex ETF, closed-form targets, NC 1-3 checks)
* CMA / max-MI / min-HD losses with analytic gradients
* A deterministic numpy trainer with checkpoint interpolation
* Thin CLI wrapper (`matinfo`)

Public helpers exported here are considered part of the semi-stable API.
"""

__version__ = "1.0.0"

from .common.logging_config import configure_logging  # noqa: F401
from .common.config import MatinfoSettings  # noqa: F401
from .core.linalg import FeatureMatrix, GramMatrix, Spectrum, gram  # noqa: F401
from .core.metrics import (  # noqa: F401
    davies_bouldin,
    effective_rank,
    hdr,
    matrix_entropy,
    matrix_mi,
    mir,
    silhouette,
)
from .core.collapse import nc_check, nc_targets, simplex_etf, structure_matrix  # noqa: F401
from .core.losses import cma_loss, hd_loss, mi_loss  # noqa: F401
from .core.trainer import interpolate, train  # noqa: F401
from .core.train_config import TrainConfig  # noqa: F401

__all__ = [
    "configure_logging",
    "MatinfoSettings",
    "FeatureMatrix",
    "GramMatrix",
    "Spectrum",
    "gram",
    "davies_bouldin",
    "effective_rank",
    "hdr",
    "matrix_entropy",
    "matrix_mi",
    "mir",
    "silhouette",
    "nc_check",
    "nc_targets",
    "simplex_etf",
    "structure_matrix",
    "cma_loss",
    "hd_loss",
    "mi_loss",
    "interpolate",
    "train",
    "TrainConfig",
]

