"""
Constants, tolerances and exit codes for matinfo.
"""


class ExitCodes:
    """Exit codes for different error conditions (stable contract)."""
    OK = 0
    VERIFICATION_FAILED = 1
    USAGE_ERROR = 2
    DATA_INVARIANT_VIOLATION = 3


# Gram matrix invariants
SYMMETRY_TOLERANCE = 1e-12
DIAGONAL_TOLERANCE = 1e-9
TRACE_TOLERANCE = 1e-6
EIGENVALUE_FLOOR = -1e-8

# Columns at or below this norm cannot be normalized.
ZERO_NORM_TOLERANCE = 1e-12

# Relative eigenvalue weight (lambda / N) treated as an exact zero by the entropy.
ZERO_EIGENVALUE_RTOL = 1e-12

# Singular values at or below this are "all zero" for the effective rank.
ZERO_SINGULAR_VALUE = 1e-14

# Numerical rank: singular values > NUMERICAL_RANK_RTOL * sigma_max.
NUMERICAL_RANK_RTOL = 1e-10

# Entropies at or below this are degenerate denominators for MIR / HDR.
DEGENERATE_ENTROPY = 1e-12

# Tolerance for MI / MIR sanity warnings (subadditivity).
SUBADDITIVITY_SLACK = 1e-9

# Derivative of x log x is clipped at this eigenvalue.
GRADIENT_EIGENVALUE_CLIP = 1e-12

# Entropy gaps at or below this count as ties (zero subgradient) in hd_loss.
ENTROPY_TIE_TOLERANCE = 1e-12

# Finite-difference step bounds.
FD_STEP_MIN = 1e-7
FD_STEP_MAX = 1e-3

# Training defaults
DEFAULT_HIDDEN_WIDTH = 128
DEFAULT_EVAL_BATCH = 256
DEFAULT_THREADS = 1

METRIC_RECORD_KEYS = (
    "step",
    "split",
    "h_feat",
    "h_weights",
    "mi",
    "mir",
    "hdr",
    "accuracy",
    "loss",
)

SPLITS = ("train", "test")

CHECKPOINT_FORMAT = "matinfo-checkpoint"
CHECKPOINT_VERSION = 1
