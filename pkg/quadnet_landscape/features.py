"""Three-layer network with a frozen random polynomial feature layer.

The first layer maps x to z with z_i = (r_i^T x)^p and is never trained;
the middle layer is the two-layer quadratic network of network.py, trained
on the dataset of features with width r = 2k + 2.

This module provides:
- smooth_inputs(): Gaussian input perturbation x_bar = x + N(0, vI)
- make_layer(), identity_layer(): Build the frozen layer
- feature_map(), feature_matrix(): Features of one or many inputs
- z_tensor_matrix(): Z with column j equal to z_j (x) z_j
- build_q_matrix(), x_bar_power_matrix(): Q and the tensor powers of the
  inputs, for checking Z = (Q (x) Q) X_bar at small sizes
- z_singular_certificate(), feature_norm_bound(), conditioning_ratio():
  Measurements against the closed-form bounds
- train_three_layer(): Smooth, featurize and train
"""

import logging
import math
from typing import Optional

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .constants import (
    ADAM_DECAY_EVERY_EPOCHS,
    DEFAULT_BOUND_DELTA,
    DEFAULT_FEATURE_SCALE,
    DEFAULT_MAX_ITERS,
    DEFAULT_RECORD_EVERY,
    PGD_C,
    PGD_DELTA,
    SEED_FEATURES,
    SEED_NOISE,
    SEED_OPTIMIZER,
    TENSOR_MATRIX_CAP,
)
from .errors import (
    DegenerateInstanceError,
    InvalidArgumentError,
    PreconditionError,
)
from .models import (
    Dataset,
    FeatureNormReport,
    RandomFeatureLayer,
    SmoothedDataset,
    TensorMatrix,
    ThreeLayerResult,
    ZCertificate,
)
from .optim import train_two_layer
from .spectra import tensor_power_rows
from .utils import as_vector, binomial, check_cap, make_rng

logger = logging.getLogger(__name__)


def default_width(n: int) -> int:
    """Feature count k = 2 ceil(sqrt(n))."""
    return 2 * math.ceil(math.sqrt(n))


def smooth_inputs(data: Dataset, v: float, seed: int = SEED_NOISE) -> SmoothedDataset:
    """Perturb every input by an independent N(0, vI) sample.

    v = 0 returns the inputs unchanged.

    Raises:
        InvalidArgumentError: If v is negative
    """
    if v < 0 or not math.isfinite(v):
        raise InvalidArgumentError(f"perturbation variance must be >= 0, got {v}")
    if v == 0:
        X_bar = data.X.copy()
    else:
        rng = make_rng(seed)
        X_bar = data.X + math.sqrt(v) * rng.standard_normal(data.X.shape)
    return SmoothedDataset(base=data, v=v, seed=seed, X_bar=X_bar)


def make_layer(
    d: int, k: int, p: int, seed: int = SEED_FEATURES, scale: float = DEFAULT_FEATURE_SCALE
) -> RandomFeatureLayer:
    """Draw R with i.i.d. N(0, scale^2) entries, shape (k, d)."""
    if d < 1 or k < 1:
        raise InvalidArgumentError(f"d and k must be at least 1, got d={d}, k={k}")
    if scale <= 0:
        raise InvalidArgumentError(f"scale must be positive, got {scale}")
    R = scale * make_rng(seed).standard_normal((k, d))
    return RandomFeatureLayer(R=R, p=p, seed=seed, scale=scale)


def identity_layer(d: int) -> RandomFeatureLayer:
    """R = I, p = 1: the features are the inputs themselves."""
    return RandomFeatureLayer(R=np.eye(d), p=1)


def feature_map(layer: RandomFeatureLayer, x) -> NDArray[np.float64]:
    """z_i = (r_i^T x)^p for one input.

    Example:
        >>> feature_map(identity_layer(2), [3.0, -1.0])
        array([ 3., -1.])
    """
    vec = as_vector(x, "x")
    if vec.size != layer.d:
        raise InvalidArgumentError(f"x has dimension {vec.size}, layer expects {layer.d}")
    return (layer.R @ vec) ** layer.p


def feature_matrix(layer: RandomFeatureLayer, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """Features of every row of X, shape (n, k)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != layer.d:
        raise InvalidArgumentError(f"inputs have shape {X.shape}, layer expects d={layer.d}")
    return (X @ layer.R.T) ** layer.p


def feature_dataset(layer: RandomFeatureLayer, smoothed: SmoothedDataset) -> Dataset:
    """Features of the perturbed inputs paired with the original labels."""
    return Dataset(feature_matrix(layer, smoothed.X_bar), smoothed.base.y)


def z_tensor_matrix(
    layer: RandomFeatureLayer, smoothed: SmoothedDataset, cap: int = TENSOR_MATRIX_CAP
) -> NDArray[np.float64]:
    """Z with column j equal to z_j (x) z_j, shape (k^2, n).

    Raises:
        ResourceLimitError: If k^2 * n exceeds ``cap``
    """
    n = smoothed.X_bar.shape[0]
    check_cap(layer.k**2 * n, cap, "feature tensor matrix k^2*n")
    return tensor_power_rows(feature_matrix(layer, smoothed.X_bar), 2).T


def build_q_matrix(layer: RandomFeatureLayer, cap: int = TENSOR_MATRIX_CAP) -> NDArray[np.float64]:
    """Q with row i equal to r_i^(x)p, shape (k, d^p)."""
    check_cap(layer.k * layer.d**layer.p, cap, "Q matrix k*d^p")
    return tensor_power_rows(layer.R, layer.p)


def x_bar_power_matrix(
    smoothed: SmoothedDataset, order: int, cap: int = TENSOR_MATRIX_CAP
) -> NDArray[np.float64]:
    """Matrix with column j equal to x_bar_j^(x)order, shape (d^order, n)."""
    n, d = smoothed.X_bar.shape
    check_cap(d**order * n, cap, f"input tensor matrix d^{order}*n")
    return tensor_power_rows(smoothed.X_bar, order).T


def z_theory_bound(d: int, k: int, n: int, p: int, v: float, delta: float) -> float:
    """High-probability lower bound on sigma_min(Z) under smoothing.

    ((D(2p) - k D(p) C(2p, p)) (C(k+1, 2) - n) / ((4p)!)^3)^(1/4)
    * v^p delta^(4p) / (n^(2p+1/2) k^(4p)) with D(q) = C(q+d-1, q).
    A nonpositive bracket gives 0 (the bound says nothing).
    """
    bracket = (
        (binomial(2 * p + d - 1, 2 * p) - k * binomial(p + d - 1, p) * binomial(2 * p, p))
        * (binomial(k + 1, 2) - n)
    )
    if bracket <= 0 or v <= 0:
        return 0.0
    # big-integer factorials overflow float division otherwise
    root = math.exp(0.25 * (math.log(bracket) - 3.0 * math.lgamma(4 * p + 1)))
    return root * v**p * delta ** (4 * p) / (n ** (2 * p + 0.5) * k ** (4 * p))


def z_singular_certificate(
    layer: RandomFeatureLayer,
    smoothed: SmoothedDataset,
    delta: float = DEFAULT_BOUND_DELTA,
    cap: int = TENSOR_MATRIX_CAP,
) -> ZCertificate:
    """Measure sigma_min(Z) and report it with the smoothed-analysis bound.

    Raises:
        PreconditionError: If C(k+1, 2) <= n
    """
    n = smoothed.X_bar.shape[0]
    k = layer.k
    if n < 1:
        raise InvalidArgumentError("dataset is empty")
    if binomial(k + 1, 2) <= n:
        raise PreconditionError(
            f"need C(k+1, 2) > n for a full-rank Z, got C({k + 1}, 2) = {binomial(k + 1, 2)} <= n = {n}"
        )
    Z = z_tensor_matrix(layer, smoothed, cap=cap)
    singular = scipy.linalg.svdvals(Z)
    measured = TensorMatrix(matrix=Z, sigma_min=float(singular.min()), sigma_max=float(singular.max()))
    sigma = measured.sigma_min if measured.full_column_rank else 0.0
    return ZCertificate(
        sigma_min=sigma,
        theory_bound=z_theory_bound(layer.d, k, n, layer.p, smoothed.v, delta),
        positive=sigma > 0,
        n=n,
        k=k,
        p=layer.p,
        v=smoothed.v,
    )


def feature_norm_bound(
    layer: RandomFeatureLayer, smoothed: SmoothedDataset, delta: float = DEFAULT_BOUND_DELTA
) -> FeatureNormReport:
    """Largest ||z_j|| against sqrt(k) (2 (B + 2 sqrt(v d L)) sqrt(d L))^p scale^p.

    L = ln((k + n) d delta^(-1/2)) and B is the largest original input norm.
    A violation is possible with small probability and is logged, not raised.
    """
    if not 0 < delta < 1:
        raise InvalidArgumentError(f"delta must lie in (0, 1), got {delta}")
    n = smoothed.X_bar.shape[0]
    d, k, p = layer.d, layer.k, layer.p
    L = math.log((k + n) * d / math.sqrt(delta))
    base = 2.0 * (smoothed.base.B + 2.0 * math.sqrt(smoothed.v * d * L)) * math.sqrt(d * L)
    bound = math.sqrt(k) * (base * layer.scale) ** p
    Z = feature_matrix(layer, smoothed.X_bar)
    max_norm = float(np.max(np.linalg.norm(Z, axis=1))) if n else 0.0
    violated = max_norm > bound
    if violated:
        logger.warning("feature norm %.6g exceeds its bound %.6g", max_norm, bound)
    return FeatureNormReport(max_norm=max_norm, bound=bound, violated=violated)


def conditioning_ratio(
    layer: RandomFeatureLayer, smoothed: SmoothedDataset, cap: int = TENSOR_MATRIX_CAP
) -> float:
    """sigma_min(Z) / sigma_min(X_bar^(x)2p): how much the frozen layer costs.

    Since Z = (Q (x) Q) X_bar^(x)2p, the ratio is the measured conditioning
    of Q (x) Q on the span of the input tensor powers. Returns 0 when
    X_bar^(x)2p is rank-deficient.
    """
    Z = z_tensor_matrix(layer, smoothed, cap=cap)
    X_pow = x_bar_power_matrix(smoothed, 2 * layer.p, cap=cap)
    sigma_x = float(scipy.linalg.svdvals(X_pow).min())
    if sigma_x == 0.0:
        return 0.0
    return float(scipy.linalg.svdvals(Z).min()) / sigma_x


def train_three_layer(
    data: Dataset,
    p: int,
    k: Optional[int],
    eps_target: float,
    v: float,
    seed_features: int = SEED_FEATURES,
    seed_noise: int = SEED_NOISE,
    seed_optimizer: int = SEED_OPTIMIZER,
    scale: float = DEFAULT_FEATURE_SCALE,
    layer: Optional[RandomFeatureLayer] = None,
    optimizer: str = "pgd",
    max_iters: int = DEFAULT_MAX_ITERS,
    gamma: Optional[float] = None,
    ell: Optional[float] = None,
    rho: Optional[float] = None,
    pgd_eps: Optional[float] = None,
    c: float = PGD_C,
    delta: float = PGD_DELTA,
    lr: Optional[float] = None,
    batch_size: Optional[int] = None,
    decay_factor: float = 1.0,
    decay_every_epochs: int = ADAM_DECAY_EVERY_EPOCHS,
    record_every: int = DEFAULT_RECORD_EVERY,
    bound_delta: float = DEFAULT_BOUND_DELTA,
    tensor_cap: int = TENSOR_MATRIX_CAP,
    init_scale: float = 0.0,
) -> ThreeLayerResult:
    """Train the middle layer of the three-layer network.

    Smooths the inputs, computes the features of a frozen layer (drawn from
    ``seed_features`` unless ``layer`` is given), certifies Z and trains the
    two-layer network on the features with width 2k + 2 through
    train_two_layer(). With the identity layer and v = 0 the run is the
    two-layer run on the same data.

    Args:
        data: Training data
        p: Feature degree
        k: Feature count (default 2 ceil(sqrt(n))); ignored when ``layer`` is given
        eps_target: Loss target
        v: Smoothing variance
        seed_features, seed_noise, seed_optimizer: Seeds of the three
            sources of randomness
        scale: Standard deviation of the entries of R
        layer: Prebuilt first layer
        bound_delta: Failure probability used in the reported bounds
        Remaining arguments are forwarded to train_two_layer().

    Raises:
        PreconditionError: If C(k+1, 2) <= n
        DegenerateInstanceError: If sigma_min(Z) = 0
    """
    if data.n > 0 and (data.B > 1.0 or data.Y > 1.0):
        logger.warning(
            "inputs or labels exceed the unit bound (B = %.6g, Y = %.6g); bounds are reported as is",
            data.B,
            data.Y,
        )
    if layer is None:
        width = default_width(data.n) if k is None else k
        layer = make_layer(data.d, width, p, seed=seed_features, scale=scale)
    elif layer.d != data.d:
        raise InvalidArgumentError(f"layer expects d={layer.d}, data has d={data.d}")

    smoothed = smooth_inputs(data, v, seed=seed_noise)
    certificate = z_singular_certificate(layer, smoothed, delta=bound_delta, cap=tensor_cap)
    if not certificate.positive:
        raise DegenerateInstanceError(
            "feature matrix Z is rank-deficient (sigma_min = 0); "
            "try a larger smoothing variance v or another feature seed"
        )
    norm_report = feature_norm_bound(layer, smoothed, delta=bound_delta)
    features = feature_dataset(layer, smoothed)
    logger.info(
        "features ready: k=%d p=%d sigma_min(Z)=%.6g max ||z||=%.6g",
        layer.k,
        layer.p,
        certificate.sigma_min,
        norm_report.max_norm,
    )

    train = train_two_layer(
        features,
        r=2 * layer.k + 2,
        eps_target=eps_target,
        optimizer=optimizer,
        seed=seed_optimizer,
        max_iters=max_iters,
        gamma=gamma,
        ell=ell,
        rho=rho,
        pgd_eps=pgd_eps,
        c=c,
        delta=delta,
        lr=lr,
        batch_size=batch_size,
        decay_factor=decay_factor,
        decay_every_epochs=decay_every_epochs,
        record_every=record_every,
        tensor_cap=tensor_cap,
        init_scale=init_scale,
    )
    return ThreeLayerResult(
        train=train,
        layer=layer,
        smoothed=smoothed,
        feature_data=features,
        certificate=certificate,
        norm_report=norm_report,
    )
