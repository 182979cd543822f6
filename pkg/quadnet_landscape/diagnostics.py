"""Landscape and regularity certificates for quadnet-landscape.

This module checks the optimization-landscape claims on concrete instances:
- x_tensor_matrix(): X = [x_j^(x)q] and its smallest singular value
- landscape_report(): lambda_min of the Hessian versus ||M(W)||, and the
  loss bound in terms of sigma_min(X)
- stationarity_check(): epsilon-second-order stationarity of g
- escape_direction(): Unit eigenvector of the most negative Hessian eigenvalue
- smoothness_constants(), empirical_lipschitz_probe(): Regularity constants
  of g on a Frobenius ball and an empirical check of them
- format_report(): Key/value view of a report
- check_descent(), check_bounded_iterates(): Trace-level invariants
"""

import logging
import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .constants import (
    DESCENT_SLACK,
    HESSIAN_CAP,
    LANDSCAPE_IDENTITY_TOL,
    LIPSCHITZ_SLACK,
    LOSS_BOUND_SLACK,
    TENSOR_MATRIX_CAP,
)
from .errors import InvalidArgumentError, PropertyFailureError
from .models import (
    Dataset,
    LandscapeReport,
    LipschitzProbe,
    SmoothnessConstants,
    StationarityReport,
    TensorMatrix,
    TraceRecord,
    TwoLayerParams,
)
from .network import (
    grad_g,
    hessian_full,
    hessian_quadratic,
    loss_f,
    residual_matrix,
)
from .spectra import min_eigenpair_sym, spectral_norm_sym, tensor_power_rows
from .utils import check_cap, make_rng, uniform_ball

logger = logging.getLogger(__name__)


def x_tensor_matrix(data: Dataset, order: int = 2, cap: int = TENSOR_MATRIX_CAP) -> TensorMatrix:
    """Build X with column j equal to x_j^(x)order, with its extreme singular values.

    Raises:
        ResourceLimitError: If d**order * n exceeds ``cap``
    """
    if data.n < 1:
        raise InvalidArgumentError("dataset is empty")
    check_cap(data.d**order * data.n, cap, f"tensor matrix of order {order}")
    matrix = tensor_power_rows(data.X, order).T
    singular = scipy.linalg.svdvals(matrix)
    return TensorMatrix(matrix=matrix, sigma_min=float(singular.min()), sigma_max=float(singular.max()))


def landscape_report(
    params: TwoLayerParams,
    data: Dataset,
    cap: int = HESSIAN_CAP,
    tensor_cap: int = TENSOR_MATRIX_CAP,
) -> LandscapeReport:
    """Measure lambda_min of the Hessian, ||M(W)||, f(W) and the loss bound.

    For r >= 2d + 2 the smallest Hessian eigenvalue equals -||M(W)||_2; below
    that width the identity is not guaranteed and a warning is logged.

    Raises:
        ResourceLimitError: If d * r exceeds ``cap``
    """
    width_ok = params.r >= 2 * params.d + 2
    if not width_ok:
        logger.warning(
            "width r=%d is below 2d+2=%d; the Hessian/residual identity is not guaranteed",
            params.r,
            2 * params.d + 2,
        )
    H = hessian_full(params, data, cap=cap)
    lam, _ = min_eigenpair_sym(H)
    norm_m = spectral_norm_sym(residual_matrix(params, data))
    loss = loss_f(params, data)

    tm = x_tensor_matrix(data, 2, cap=tensor_cap)
    sigma = tm.sigma_min if tm.full_column_rank else 0.0
    if sigma > 0:
        loss_bound = data.n * data.d * norm_m**2 / (4.0 * sigma**2)
    else:
        loss_bound = math.inf
    residual = abs(lam + norm_m)

    return LandscapeReport(
        lambda_min_hessian=lam,
        spectral_norm_M=norm_m,
        loss=loss,
        sigma_min_X=sigma,
        loss_bound=loss_bound,
        identity_residual=residual,
        width_ok=width_ok,
        identity_holds=width_ok and residual <= LANDSCAPE_IDENTITY_TOL * max(1.0, norm_m),
        bound_holds=loss <= loss_bound + LOSS_BOUND_SLACK,
    )


def stationarity_check(
    params: TwoLayerParams,
    data: Dataset,
    gamma: float,
    eps: float,
    rho: float,
    cap: int = HESSIAN_CAP,
) -> StationarityReport:
    """Check ||grad g|| <= eps and lambda_min(Hessian of g) >= -sqrt(rho eps)."""
    if eps <= 0 or rho <= 0:
        raise InvalidArgumentError(f"eps and rho must be positive, got eps={eps}, rho={rho}")
    grad_norm = float(np.linalg.norm(grad_g(params, data, gamma)))
    lam, _ = min_eigenpair_sym(hessian_full(params, data, gamma=gamma, cap=cap))
    curvature_threshold = -math.sqrt(rho * eps)
    return StationarityReport(
        grad_norm=grad_norm,
        lambda_min_g=lam,
        grad_threshold=eps,
        curvature_threshold=curvature_threshold,
        is_eps_sosp=grad_norm <= eps and lam >= curvature_threshold,
    )


def escape_direction(
    params: TwoLayerParams, data: Dataset, cap: int = HESSIAN_CAP
) -> Tuple[float, NDArray[np.float64]]:
    """Most negative Hessian eigenvalue of f and its unit eigenvector, shaped like W."""
    lam, vector = min_eigenpair_sym(hessian_full(params, data, cap=cap))
    return lam, vector.reshape((params.r, params.d)).T


def smoothness_constants(Gamma: float, B: float, Y: float, gamma: float) -> SmoothnessConstants:
    """Regularity of g on {||W||_F^2 <= Gamma}.

    grad g is (3 B^4 Gamma + Y B^2 + gamma)-Lipschitz and the Hessian of g is
    (6 B^4 sqrt(Gamma))-Lipschitz.
    """
    if min(Gamma, B, Y, gamma) < 0:
        raise InvalidArgumentError("Gamma, B, Y and gamma must be nonnegative")
    return SmoothnessConstants(
        ell_bound=3.0 * B**4 * Gamma + Y * B**2 + gamma,
        rho_bound=6.0 * B**4 * math.sqrt(Gamma),
    )


def empirical_lipschitz_probe(
    data: Dataset,
    gamma: float,
    Gamma: float,
    trials: int,
    seed: int,
    r: Optional[int] = None,
) -> LipschitzProbe:
    """Sample pairs U, V in {||W||_F^2 <= Gamma} and compare regularity ratios.

    For each pair the gradient ratio ||grad g(U) - grad g(V)|| / ||U - V|| and
    the Hessian ratio |H_U(Z, Z) - H_V(Z, Z)| / (||U - V|| ||Z||^2), with Z a
    random direction, are compared against smoothness_constants().

    Args:
        data: Training data
        gamma: Regularization weight
        Gamma: Squared Frobenius radius of the ball
        trials: Number of sampled pairs
        seed: Generator seed
        r: Network width (default 2d + 2)

    Raises:
        PropertyFailureError: If any ratio exceeds its bound; ``witness``
            holds (U, V, Z)
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials must be at least 1, got {trials}")
    width = r if r is not None else 2 * data.d + 2
    bounds = smoothness_constants(Gamma, data.B, data.Y, gamma)
    rng = make_rng(seed)
    radius = math.sqrt(Gamma)
    max_grad = 0.0
    max_hess = 0.0
    for trial in range(trials):
        U = uniform_ball(rng, data.d * width, radius).reshape(data.d, width, order="F")
        V = uniform_ball(rng, data.d * width, radius).reshape(data.d, width, order="F")
        Z = rng.standard_normal((data.d, width))
        Z /= np.linalg.norm(Z)
        gap = float(np.linalg.norm(U - V))
        if gap == 0.0:
            continue
        pu, pv = TwoLayerParams(U), TwoLayerParams(V)
        grad_ratio = float(np.linalg.norm(grad_g(pu, data, gamma) - grad_g(pv, data, gamma))) / gap
        hess_ratio = abs(
            hessian_quadratic(pu, data, Z, gamma) - hessian_quadratic(pv, data, Z, gamma)
        ) / gap
        max_grad = max(max_grad, grad_ratio)
        max_hess = max(max_hess, hess_ratio)
        if grad_ratio > bounds.ell_bound * (1 + LIPSCHITZ_SLACK) + LIPSCHITZ_SLACK:
            raise PropertyFailureError(
                f"gradient ratio {grad_ratio!r} exceeds {bounds.ell_bound!r} at trial {trial}",
                witness=(U, V, Z),
            )
        if hess_ratio > bounds.rho_bound * (1 + LIPSCHITZ_SLACK) + LIPSCHITZ_SLACK:
            raise PropertyFailureError(
                f"Hessian ratio {hess_ratio!r} exceeds {bounds.rho_bound!r} at trial {trial}",
                witness=(U, V, Z),
            )
    return LipschitzProbe(
        max_grad_ratio=max_grad, max_hessian_ratio=max_hess, trials=trials, bounds=bounds
    )


def format_report(report, prefix: str = "") -> Dict[str, Any]:
    """Ordered key/value view of a report, keys optionally prefixed ("landscape.")."""
    return {f"{prefix}{key}": value for key, value in report.as_dict().items()}


def check_descent(trace: List[TraceRecord], slack: float = DESCENT_SLACK) -> List[int]:
    """Iterations where the objective rose without a perturbation.

    Returns an empty list when the trace is non-increasing outside
    perturbation steps.
    """
    violations = []
    for prev, cur in zip(trace, trace[1:]):
        if not cur.perturbed and cur.objective > prev.objective + slack:
            violations.append(cur.iteration)
    return violations


def check_bounded_iterates(trace: List[TraceRecord], radius_sq: float) -> List[int]:
    """Iterations whose recorded point has ||W||_F^2 above ``radius_sq``."""
    return [
        rec.iteration
        for rec in trace
        if rec.param_sq_norm is not None and rec.param_sq_norm > radius_sq
    ]
