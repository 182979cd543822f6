"""Data models for quadnet-landscape.

This module contains all dataclasses used throughout the package:
- Dataset, SmoothedDataset: Training inputs and their smoothed variant
- TwoLayerParams, RandomFeatureLayer: Network weights
- SymTensorRV: Reduced vectorized form of a symmetric tensor
- PgdHyper, PgdDerived, Theorem3Params: Optimizer inputs and derived constants
- TraceRecord, OptimizeResult, TrainResult, ThreeLayerResult: Run outputs
- LandscapeReport, StationarityReport, SmoothnessConstants, LipschitzProbe,
  TensorMatrix, SpectralSandwich, ZCertificate, FeatureNormReport:
  Certificates and diagnostics
- PcaProjection, RunConfig: Preprocessing and CLI plumbing
"""

import math
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from .constants import PGD_C, PGD_C_MAX, PGD_DELTA
from .errors import InvalidArgumentError


def _scalar_fields(obj: Any) -> Dict[str, Any]:
    """Collect the scalar (int/float/bool/str) fields of a dataclass in order."""
    out: Dict[str, Any] = {}
    for f in fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, (bool, int, float, str, np.floating, np.integer, np.bool_)):
            out[f.name] = value.item() if hasattr(value, "item") else value
    return out


# =============================================================================
# Datasets
# =============================================================================


@dataclass
class Dataset:
    """Training inputs and labels.

    Attributes:
        X: Input matrix, shape (n, d); row j is x_j
        y: Labels, shape (n,)

    Properties:
        n, d: Sample count and input dimension
        B: max_j ||x_j||_2, recomputed from X
        Y: max_j |y_j|, recomputed from y
    """

    X: NDArray[np.float64]
    y: NDArray[np.float64]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2:
            raise InvalidArgumentError(f"X must be 2-D, got shape {self.X.shape}")
        if self.y.ndim != 1:
            raise InvalidArgumentError(f"y must be 1-D, got shape {self.y.shape}")
        if self.X.shape[1] < 1:
            raise InvalidArgumentError("input dimension d must be at least 1")
        if self.X.shape[0] != self.y.shape[0]:
            raise InvalidArgumentError(
                f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} labels"
            )
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise InvalidArgumentError("dataset has non-finite entries")

    @property
    def n(self) -> int:
        """Number of samples."""
        return self.X.shape[0]

    @property
    def d(self) -> int:
        """Input dimension."""
        return self.X.shape[1]

    @property
    def B(self) -> float:
        """Largest input norm."""
        if self.n == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.X, axis=1)))

    @property
    def Y(self) -> float:
        """Largest label magnitude."""
        if self.n == 0:
            return 0.0
        return float(np.max(np.abs(self.y)))


@dataclass
class SmoothedDataset:
    """A dataset whose inputs were perturbed by Gaussian noise N(0, vI).

    Attributes:
        base: The unperturbed dataset
        v: Noise variance per coordinate
        seed: Seed of the noise generator
        X_bar: Perturbed inputs, shape (n, d)
    """

    base: Dataset
    v: float
    seed: int
    X_bar: NDArray[np.float64]

    @property
    def dataset(self) -> Dataset:
        """The perturbed inputs paired with the base labels."""
        return Dataset(self.X_bar, self.base.y)


@dataclass
class PcaProjection:
    """Principal components fitted on a centered data matrix.

    Attributes:
        components: Loadings, shape (k, d), orthonormal rows
        mean: Column means removed before projection, shape (d,)
        explained_variance_ratio: Share of total variance per component
    """

    components: NDArray[np.float64]
    mean: NDArray[np.float64]
    explained_variance_ratio: NDArray[np.float64]


# =============================================================================
# Network parameters
# =============================================================================


def sign_pattern(r: int) -> NDArray[np.float64]:
    """Output signs a: +1 for the first r/2 neurons, -1 for the rest."""
    half = r // 2
    return np.concatenate([np.ones(half), -np.ones(r - half)])


@dataclass
class TwoLayerParams:
    """Weights of the quadratic-activation network y = sum_i a_i (w_i^T x)^2.

    Attributes:
        W: Hidden weights, shape (d, r); column i is w_i
        a: Fixed output signs, half +1 then half -1
    """

    W: NDArray[np.float64]
    a: Optional[NDArray[np.float64]] = None

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        if self.W.ndim != 2:
            raise InvalidArgumentError(f"W must be 2-D, got shape {self.W.shape}")
        r = self.W.shape[1]
        if r < 2 or r % 2:
            raise InvalidArgumentError(f"width r must be even and at least 2, got {r}")
        expected = sign_pattern(r)
        if self.a is None:
            self.a = expected
        else:
            self.a = np.asarray(self.a, dtype=np.float64)
            if self.a.shape != expected.shape or not np.array_equal(self.a, expected):
                raise InvalidArgumentError("a must be the half/half +1/-1 sign pattern")

    @classmethod
    def zeros(cls, d: int, r: int) -> "TwoLayerParams":
        """The W = 0 starting point."""
        return cls(np.zeros((d, r)))

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def r(self) -> int:
        return self.W.shape[1]


@dataclass
class RandomFeatureLayer:
    """Frozen first layer z_i = (r_i^T x)^p.

    Attributes:
        R: Weights, shape (k, d); row i is r_i
        p: Polynomial degree
        seed: Seed that generated R (-1 for hand-built layers)
        scale: Standard deviation of the entries of R
    """

    R: NDArray[np.float64]
    p: int
    seed: int = -1
    scale: float = 1.0

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=np.float64)
        if self.R.ndim != 2 or self.R.size == 0:
            raise InvalidArgumentError(f"R must be a nonempty 2-D matrix, got shape {self.R.shape}")
        if self.p < 1:
            raise InvalidArgumentError(f"degree p must be at least 1, got {self.p}")

    @property
    def k(self) -> int:
        return self.R.shape[0]

    @property
    def d(self) -> int:
        return self.R.shape[1]


# =============================================================================
# Tensors
# =============================================================================


@dataclass
class SymTensorRV:
    """Reduced vectorized form of a symmetric order-p tensor over R^d.

    Coefficient i multiplies the basis tensor that sums every distinct
    permutation of one sorted index tuple; tuples are ordered
    lexicographically, so e_1...e_1 comes first.

    Attributes:
        d: Dimension
        p: Order
        coeffs: Coefficients, length C(p+d-1, p)
    """

    d: int
    p: int
    coeffs: NDArray[np.float64]

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        expected = math.comb(self.p + self.d - 1, self.p)
        if self.coeffs.shape != (expected,):
            raise InvalidArgumentError(
                f"expected {expected} coefficients for d={self.d}, p={self.p}, "
                f"got shape {self.coeffs.shape}"
            )

    @property
    def rv_norm(self) -> float:
        """Euclidean norm of the coefficient vector."""
        return float(np.linalg.norm(self.coeffs))


# =============================================================================
# Optimization
# =============================================================================


@dataclass
class PgdHyper:
    """Inputs of perturbed gradient descent.

    Attributes:
        x0: Starting point (flattened)
        ell: Gradient Lipschitz constant, at least 1
        rho: Hessian Lipschitz constant, positive
        eps: Target accuracy, 0 < eps <= ell^2 / rho
        c: Step constant, 0 < c <= 1
        delta: Failure probability, 0 < delta < 1
        delta_f: Upper bound on f(x0) - f*, positive
        dim: Dimension of the parameter space (defaults to x0.size)
    """

    x0: NDArray[np.float64]
    ell: float
    rho: float
    eps: float
    c: float = PGD_C
    delta: float = PGD_DELTA
    delta_f: float = 1.0
    dim: Optional[int] = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=np.float64).ravel()
        if self.dim is None:
            self.dim = self.x0.size
        checks = [
            (self.dim >= 1, "dimension must be at least 1"),
            (self.ell >= 1, f"ell must be >= 1, got {self.ell}"),
            (self.rho > 0, f"rho must be > 0, got {self.rho}"),
            (self.eps > 0, f"eps must be > 0, got {self.eps}"),
            (0 < self.c <= PGD_C_MAX, f"c must be in (0, {PGD_C_MAX}], got {self.c}"),
            (0 < self.delta < 1, f"delta must be in (0, 1), got {self.delta}"),
            (self.delta_f > 0, f"delta_f must be > 0, got {self.delta_f}"),
        ]
        for ok, message in checks:
            if not ok:
                raise InvalidArgumentError(message)
        if self.eps > self.ell**2 / self.rho:
            raise InvalidArgumentError(
                f"eps must satisfy eps <= ell^2/rho = {self.ell**2 / self.rho}, got {self.eps}"
            )


@dataclass
class PgdDerived:
    """Constants derived from PgdHyper at the start of the algorithm.

    Attributes:
        chi: Logarithmic factor
        eta: Step size
        r_pert: Perturbation radius
        g_thres: Gradient threshold that triggers a perturbation
        f_thres: Required decrease after a perturbation phase
        t_thres: Length of a perturbation phase (real valued)
    """

    chi: float
    eta: float
    r_pert: float
    g_thres: float
    f_thres: float
    t_thres: float

    @property
    def t_steps(self) -> int:
        """Integer phase length used by the iteration loop."""
        return max(1, math.ceil(self.t_thres))

    def as_dict(self) -> Dict[str, Any]:
        return _scalar_fields(self)


@dataclass
class TraceRecord:
    """One logged optimizer iteration.

    Attributes:
        iteration: Iteration index t
        objective: Objective at the point the step is taken from
        grad_norm: Gradient norm at that point
        perturbed: Whether a perturbation was injected at t
        param_sq_norm: Squared norm of the point (kept in memory only)
    """

    iteration: int
    objective: float
    grad_norm: float
    perturbed: bool = False
    param_sq_norm: Optional[float] = None


@dataclass
class OptimizeResult:
    """Outcome of one optimizer run.

    Attributes:
        point: Returned point (flattened)
        trace: Recorded iterations
        status: "converged", "budget-exhausted" or "completed"
        iterations: Number of loop iterations executed
        perturbations: Number of perturbations injected (PGD only)
        max_param_sq_norm: Largest squared norm among visited points
        ball_exits: Iterations whose point left the bounded-iterate ball
        derived: PGD constants, when the run was PGD
    """

    point: NDArray[np.float64]
    trace: List[TraceRecord] = field(default_factory=list)
    status: str = "completed"
    iterations: int = 0
    perturbations: int = 0
    max_param_sq_norm: float = 0.0
    ball_exits: int = 0
    derived: Optional[PgdDerived] = None


@dataclass
class Theorem3Params:
    """Parameter schedule for training the regularized two-layer objective.

    Attributes:
        sigma: Smallest singular value of X = [x_j (x) x_j]
        f0: Loss at W = 0
        rho: Hessian Lipschitz constant
        gamma: Regularization weight
        ell: Gradient Lipschitz constant
        delta_f: Upper bound on g(W_0) - g*, equals f0 + 1
        eps: Requested loss target
        eps_prime: Second-order accuracy PGD is run with
        radius_sq: Bounded-iterate radius 2 (f0 + 1) / gamma
    """

    sigma: float
    f0: float
    rho: float
    gamma: float
    ell: float
    delta_f: float
    eps: float
    eps_prime: float
    radius_sq: float

    def as_dict(self) -> Dict[str, Any]:
        return _scalar_fields(self)


@dataclass
class TrainResult:
    """Outcome of training the two-layer network on one dataset.

    Attributes:
        params: Final weights
        result: Optimizer output
        theorem: Parameter schedule computed from the data
        optimizer: "pgd", "gd" or "adam"
        gamma: Regularization weight actually used
        hyper: PGD inputs (PGD runs only)
        final_loss: loss_f at the final weights
    """

    params: TwoLayerParams
    result: OptimizeResult
    theorem: Theorem3Params
    optimizer: str
    gamma: float
    hyper: Optional[PgdHyper] = None
    final_loss: float = 0.0

    @property
    def trace(self) -> List[TraceRecord]:
        return self.result.trace


# =============================================================================
# Certificates
# =============================================================================


@dataclass
class LandscapeReport:
    """Measured landscape quantities at one weight matrix.

    Attributes:
        lambda_min_hessian: Smallest eigenvalue of the Hessian of f
        spectral_norm_M: max_i |lambda_i(M(W))|
        loss: f(W)
        sigma_min_X: Smallest singular value of X = [x_j (x) x_j]
        loss_bound: n d ||M||^2 / (4 sigma^2), inf when sigma is 0
        identity_residual: |lambda_min_hessian + spectral_norm_M|
        width_ok: Whether r >= 2d + 2, where the identity is guaranteed
        identity_holds: width_ok and identity_residual within
            LANDSCAPE_IDENTITY_TOL * max(1, spectral_norm_M)
        bound_holds: loss <= loss_bound + LOSS_BOUND_SLACK
    """

    lambda_min_hessian: float
    spectral_norm_M: float
    loss: float
    sigma_min_X: float
    loss_bound: float
    identity_residual: float
    width_ok: bool = True
    identity_holds: bool = True
    bound_holds: bool = True

    def as_dict(self) -> Dict[str, Any]:
        return _scalar_fields(self)


@dataclass
class StationarityReport:
    """Epsilon-second-order stationarity verdict for g at one point.

    Attributes:
        grad_norm: ||grad g(W)||_F
        lambda_min_g: Smallest eigenvalue of the Hessian of g
        grad_threshold: eps
        curvature_threshold: -sqrt(rho * eps)
        is_eps_sosp: Both conditions hold
    """

    grad_norm: float
    lambda_min_g: float
    grad_threshold: float
    curvature_threshold: float
    is_eps_sosp: bool

    @property
    def grad_margin(self) -> float:
        """Positive when the gradient condition holds."""
        return self.grad_threshold - self.grad_norm

    @property
    def curvature_margin(self) -> float:
        """Positive when the curvature condition holds."""
        return self.lambda_min_g - self.curvature_threshold

    def as_dict(self) -> Dict[str, Any]:
        out = _scalar_fields(self)
        out["grad_margin"] = self.grad_margin
        out["curvature_margin"] = self.curvature_margin
        return out


@dataclass
class SmoothnessConstants:
    """Closed-form regularity constants of g on {||W||_F^2 <= Gamma}."""

    ell_bound: float
    rho_bound: float


@dataclass
class LipschitzProbe:
    """Largest empirical regularity ratios seen over sampled pairs."""

    max_grad_ratio: float
    max_hessian_ratio: float
    trials: int
    bounds: SmoothnessConstants


@dataclass
class TensorMatrix:
    """Matrix whose columns are tensor powers of samples, with its extreme
    singular values."""

    matrix: NDArray[np.float64]
    sigma_min: float
    sigma_max: float

    @property
    def full_column_rank(self) -> bool:
        """Tall, with sigma_min above the usual numerical-rank threshold."""
        rows, cols = self.matrix.shape
        if cols > rows or cols == 0:
            return False
        threshold = max(rows, cols) * np.finfo(np.float64).eps * self.sigma_max
        return self.sigma_min > threshold


@dataclass
class SpectralSandwich:
    """Smallest singular value bracketed by the leave-one-out distance.

    Attributes:
        sigma_min: Smallest singular value
        leave_one_out: Leave-one-out distance l
        lower: l / sqrt(n)
        upper: l
        holds: lower <= sigma_min <= upper within slack
    """

    sigma_min: float
    leave_one_out: float
    lower: float
    upper: float
    holds: bool

    def as_dict(self) -> Dict[str, Any]:
        return _scalar_fields(self)


@dataclass
class ZCertificate:
    """Smallest singular value of the feature tensor matrix Z and its bound.

    The theory bound holds only with probability and up to constants, so it
    is reported alongside the measurement; positivity is the hard check.
    """

    sigma_min: float
    theory_bound: float
    positive: bool
    n: int
    k: int
    p: int
    v: float

    def as_dict(self) -> Dict[str, Any]:
        return _scalar_fields(self)


@dataclass
class FeatureNormReport:
    """Largest feature norm against its high-probability upper bound."""

    max_norm: float
    bound: float
    violated: bool

    def as_dict(self) -> Dict[str, Any]:
        return _scalar_fields(self)


@dataclass
class ThreeLayerResult:
    """Outcome of training the three-layer network.

    Attributes:
        train: Two-layer training result on the feature dataset
        layer: The frozen random feature layer
        smoothed: Perturbed inputs fed to the layer
        feature_data: Dataset of features z_j with the original labels
        certificate: sigma_min(Z) measurement
        norm_report: Feature norm against its bound
    """

    train: TrainResult
    layer: RandomFeatureLayer
    smoothed: SmoothedDataset
    feature_data: Dataset
    certificate: ZCertificate
    norm_report: FeatureNormReport

    @property
    def final_loss(self) -> float:
        return self.train.final_loss

    @property
    def trace(self) -> List[TraceRecord]:
        return self.train.trace


# =============================================================================
# CLI plumbing
# =============================================================================


@dataclass
class RunConfig:
    """Everything needed to reproduce one CLI run.

    Attributes:
        subcommand: CLI command name
        options: Raw option values as passed on the command line
        seeds: Seed per randomness source (data, features, noise, optimizer)
        derived: Derived constants (PGD schedule, theorem parameters)
    """

    subcommand: str
    options: Dict[str, Any] = field(default_factory=dict)
    seeds: Dict[str, int] = field(default_factory=dict)
    derived: Dict[str, Any] = field(default_factory=dict)

    def to_meta(self) -> Dict[str, Any]:
        """Flatten into key=value pairs for meta.txt."""
        meta: Dict[str, Any] = {"subcommand": self.subcommand}
        for key, value in self.options.items():
            meta[f"option.{key}"] = value
        for key, value in self.seeds.items():
            meta[f"seed.{key}"] = value
        for key, value in self.derived.items():
            meta[f"derived.{key}"] = value
        return meta
