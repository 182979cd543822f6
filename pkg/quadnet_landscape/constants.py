"""Constants for quadnet-landscape.

Centralizes tolerances, size caps, default seeds and optimizer defaults.
"""

# =============================================================================
# Numerical tolerances
# =============================================================================

# Absolute tolerance on entries when checking symmetry (tensors and Hessians)
SYMMETRY_TOL = 1e-9

# Eigenpair residual bound: ||Hv - lambda v|| <= EIGEN_RESIDUAL_TOL * max(1, ||H||_F)
EIGEN_RESIDUAL_TOL = 1e-7

# Relative tolerance for lambda_min(hessian) == -||M||_2
LANDSCAPE_IDENTITY_TOL = 1e-6

# Slack for the loss bound f(W) <= n d ||M||^2 / (4 sigma^2)
LOSS_BOUND_SLACK = 1e-9

# Slack for "objective non-increasing outside perturbation steps"
DESCENT_SLACK = 1e-9

# Relative slack for empirical Lipschitz ratios versus closed-form constants
LIPSCHITZ_SLACK = 1e-9


# =============================================================================
# Size caps
# =============================================================================

HESSIAN_CAP = 20_000  # maximum d * r for dense Hessian assembly
TENSOR_MATRIX_CAP = 4_000_000  # maximum entries (rows * cols) of a tensor-power matrix
KRON_CAP = 16_000_000  # maximum entries of a Kronecker product
MAX_TENSOR_ORDER = 8


# =============================================================================
# Seeds (one per randomness source)
# =============================================================================

SEED_DATA = 1
SEED_FEATURES = 2
SEED_NOISE = 3
SEED_OPTIMIZER = 4


# =============================================================================
# Perturbed gradient descent
# =============================================================================

PGD_C = 0.5
PGD_C_MAX = 1.0  # the convergence proof needs c <= 1
PGD_DELTA = 0.1
DEFAULT_MAX_ITERS = 500_000
DEFAULT_RECORD_EVERY = 1


# =============================================================================
# Training targets and smoothing
# =============================================================================

DEFAULT_EPS_TWO_LAYER = 1e-4
DEFAULT_EPS_THREE_LAYER = 1e-3
DEFAULT_SMOOTHING_VARIANCE = 0.01
DEFAULT_FEATURE_SCALE = 1.0
DEFAULT_FEATURE_DEGREE = 2
DEFAULT_BOUND_DELTA = 0.1  # failure probability used in reported theory bounds

# Inputs with B <= 1 + UNIT_NORM_SLACK take the practical PGD overrides as given
UNIT_NORM_SLACK = 1e-9


# =============================================================================
# Adam baseline (MNIST recipe defaults)
# =============================================================================

ADAM_LR = 0.003
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
ADAM_BATCH_SIZE = 128
ADAM_DECAY_FACTOR = 0.3
ADAM_DECAY_EVERY_EPOCHS = 15


# =============================================================================
# File formats
# =============================================================================

TRACE_HEADER = "iteration,objective,grad_norm,perturbed"
PARAMS_MAGIC = b"MNW1"
IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
PIXEL_SCALE = 255.0
MNIST_NUM_CLASSES = 10

DATASET_FILE = "dataset.bin"
PARAMS_FILE = "params.bin"
FEATURES_FILE = "features.bin"
TRACE_FILE = "trace.csv"
REPORT_FILE = "report.txt"
META_FILE = "meta.txt"

# Where input noise sits relative to row normalization (recorded in meta.txt)
NOISE_ORDER = "after-normalization"


# =============================================================================
# CLI exit codes
# =============================================================================

EXIT_USAGE = 1
EXIT_DEGENERATE = 2
EXIT_NUMERICAL = 3

# CLI display
SPARKLINE_POINTS = 60
