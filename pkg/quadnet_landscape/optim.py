"""Optimizers and the training driver for quadnet-landscape.

This module provides:
- derive_params(): Constants of perturbed gradient descent
- pgd(): Perturbed gradient descent
- gd(), adam(): Baselines (Adam with mini-batches and step decay)
- theorem3_params(): Width-independent parameter schedule (rho, gamma,
  ell, Delta) computed from the data
- train_two_layer(): Train the two-layer network on the
  regularized objective; shared by the two- and three-layer pipelines

Optimizers work on flattened parameter vectors and take the objective and
gradient as callables.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from numpy.typing import NDArray

from .constants import (
    ADAM_BATCH_SIZE,
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_DECAY_EVERY_EPOCHS,
    ADAM_EPS,
    ADAM_LR,
    DEFAULT_MAX_ITERS,
    DEFAULT_RECORD_EVERY,
    PGD_C,
    PGD_DELTA,
    SEED_OPTIMIZER,
    TENSOR_MATRIX_CAP,
    UNIT_NORM_SLACK,
)
from .diagnostics import x_tensor_matrix
from .errors import DegenerateInstanceError, InvalidArgumentError, NumericalFailureError
from .models import (
    Dataset,
    OptimizeResult,
    PgdDerived,
    PgdHyper,
    Theorem3Params,
    TraceRecord,
    TrainResult,
    TwoLayerParams,
)
from .network import RegularizedObjective, loss_f
from .utils import make_rng, uniform_ball

logger = logging.getLogger(__name__)

Objective = Callable[[NDArray[np.float64]], float]
Gradient = Callable[[NDArray[np.float64]], NDArray[np.float64]]
BatchGradient = Callable[[NDArray[np.float64], NDArray[np.intp]], NDArray[np.float64]]

OPTIMIZERS = ("pgd", "gd", "adam")


@dataclass
class BatchSpec:
    """Mini-batching over sample indices.

    Attributes:
        n_samples: Number of samples to draw batches from
        batch_size: Samples per batch (the last batch of an epoch may be smaller)
    """

    n_samples: int
    batch_size: int = ADAM_BATCH_SIZE

    def __post_init__(self):
        if self.n_samples < 1 or self.batch_size < 1:
            raise InvalidArgumentError("n_samples and batch_size must be at least 1")


class _Recorder:
    """Collects trace records and tracks the bounded-iterate ball."""

    def __init__(self, record_every: int, radius_sq: Optional[float]):
        if record_every < 1:
            raise InvalidArgumentError(f"record_every must be at least 1, got {record_every}")
        self.record_every = record_every
        self.radius_sq = radius_sq
        self.trace: List[TraceRecord] = []
        self.max_sq_norm = 0.0
        self.ball_exits = 0

    def visit(self, t: int, x: NDArray[np.float64]) -> float:
        sq_norm = float(np.dot(x, x))
        self.max_sq_norm = max(self.max_sq_norm, sq_norm)
        if self.radius_sq is not None and sq_norm > self.radius_sq:
            if self.ball_exits == 0:
                logger.warning(
                    "iterate left the ball ||W||^2 <= %.6g at iteration %d (||W||^2 = %.6g); continuing",
                    self.radius_sq,
                    t,
                    sq_norm,
                )
            self.ball_exits += 1
        return sq_norm

    def due(self, t: int, force: bool = False) -> bool:
        return force or t % self.record_every == 0

    def record(self, t, objective, grad_norm, perturbed, sq_norm) -> None:
        self.trace.append(TraceRecord(t, float(objective), float(grad_norm), perturbed, sq_norm))


def _finite(value, what: str, t: int):
    if not np.all(np.isfinite(value)):
        raise NumericalFailureError(f"non-finite {what}", iteration=t)
    return value


def derive_params(hyper: PgdHyper) -> PgdDerived:
    """Compute the perturbed gradient descent constants from its inputs.

    chi = 3 max(ln(d ell Delta_f / (c eps^2 delta)), 4), eta = c / ell,
    r = sqrt(c) eps / (chi^2 ell), g_thres = sqrt(c) eps / chi^2,
    f_thres = c sqrt(eps^3) / (chi^3 sqrt(rho)),
    t_thres = chi ell / (c^2 sqrt(rho eps)).
    """
    ell, rho, eps, c = hyper.ell, hyper.rho, hyper.eps, hyper.c
    chi = 3.0 * max(math.log(hyper.dim * ell * hyper.delta_f / (c * eps**2 * hyper.delta)), 4.0)
    return PgdDerived(
        chi=chi,
        eta=c / ell,
        r_pert=math.sqrt(c) * eps / (chi**2 * ell),
        g_thres=math.sqrt(c) * eps / chi**2,
        f_thres=c * math.sqrt(eps**3) / (chi**3 * math.sqrt(rho)),
        t_thres=chi * ell / (c**2 * math.sqrt(rho * eps)),
    )


def pgd(
    objective: Objective,
    gradient: Gradient,
    hyper: PgdHyper,
    max_iters: int = DEFAULT_MAX_ITERS,
    seed: int = SEED_OPTIMIZER,
    record_every: int = DEFAULT_RECORD_EVERY,
    radius_sq: Optional[float] = None,
) -> OptimizeResult:
    """Perturbed gradient descent.

    Runs gradient descent with step eta. When the gradient norm is at most
    g_thres and no perturbation happened in the last T = ceil(t_thres)
    iterations, the current point is saved as x~ and a perturbation drawn
    uniformly from the ball of radius r_pert is added. T iterations after a
    perturbation, if the objective has not dropped by f_thres below f(x~),
    x~ is returned with status "converged". Otherwise the run stops after
    ``max_iters`` iterations with status "budget-exhausted".

    Every perturbation iteration is recorded, so consecutive trace records
    never straddle a perturbation.

    Args:
        objective: Objective callable
        gradient: Gradient callable
        hyper: Algorithm inputs
        max_iters: Iteration budget
        seed: Seed of the perturbation generator
        record_every: Record one iteration in this many
        radius_sq: Squared norm of the ball the iterates should stay in;
            leaving it logs a warning

    Raises:
        NumericalFailureError: If the objective or gradient is non-finite
    """
    derived = derive_params(hyper)
    steps = derived.t_steps
    rng = make_rng(seed)
    recorder = _Recorder(record_every, radius_sq)
    x = hyper.x0.copy()
    t_noise = -steps - 1
    x_tilde: Optional[NDArray[np.float64]] = None
    f_tilde = math.inf
    perturbations = 0

    for t in range(max_iters):
        g = _finite(gradient(x), "gradient", t)
        grad_norm = float(np.linalg.norm(g))
        perturbed = False
        if grad_norm <= derived.g_thres and t - t_noise > steps:
            x_tilde = x.copy()
            f_tilde = _finite(objective(x_tilde), "objective", t)
            t_noise = t
            x = x_tilde + uniform_ball(rng, hyper.dim, derived.r_pert)
            g = _finite(gradient(x), "gradient", t)
            grad_norm = float(np.linalg.norm(g))
            perturbed = True
            perturbations += 1
            logger.debug("perturbation %d at iteration %d (f = %.6g)", perturbations, t, f_tilde)

        sq_norm = recorder.visit(t, x)
        if t - t_noise == steps:
            value = _finite(objective(x), "objective", t)
            if value - f_tilde > -derived.f_thres:
                recorder.record(t, value, grad_norm, perturbed, sq_norm)
                logger.info("pgd converged at iteration %d after %d perturbations", t, perturbations)
                return OptimizeResult(
                    point=x_tilde,
                    trace=recorder.trace,
                    status="converged",
                    iterations=t + 1,
                    perturbations=perturbations,
                    max_param_sq_norm=recorder.max_sq_norm,
                    ball_exits=recorder.ball_exits,
                    derived=derived,
                )
        if recorder.due(t, force=perturbed):
            value = _finite(objective(x), "objective", t)
            recorder.record(t, value, grad_norm, perturbed, sq_norm)
        x = x - derived.eta * g

    logger.info("pgd exhausted its budget of %d iterations", max_iters)
    final = recorder.visit(max_iters, x)
    value = _finite(objective(x), "objective", max_iters)
    recorder.record(max_iters, value, float(np.linalg.norm(gradient(x))), False, final)
    return OptimizeResult(
        point=x,
        trace=recorder.trace,
        status="budget-exhausted",
        iterations=max_iters,
        perturbations=perturbations,
        max_param_sq_norm=recorder.max_sq_norm,
        ball_exits=recorder.ball_exits,
        derived=derived,
    )


def gd(
    objective: Objective,
    gradient: Gradient,
    x0: NDArray[np.float64],
    eta: float,
    max_iters: int,
    record_every: int = DEFAULT_RECORD_EVERY,
    radius_sq: Optional[float] = None,
) -> OptimizeResult:
    """Plain gradient descent x_{t+1} = x_t - eta grad f(x_t).

    The returned trace has one record per recorded iterate x_0, ..., x_T,
    including the final point.
    """
    if eta <= 0:
        raise InvalidArgumentError(f"step size must be positive, got {eta}")
    recorder = _Recorder(record_every, radius_sq)
    x = np.asarray(x0, dtype=np.float64).ravel().copy()
    for t in range(max_iters + 1):
        g = _finite(gradient(x), "gradient", t)
        sq_norm = recorder.visit(t, x)
        if recorder.due(t, force=t == max_iters):
            value = _finite(objective(x), "objective", t)
            recorder.record(t, value, float(np.linalg.norm(g)), False, sq_norm)
        if t == max_iters:
            break
        x = x - eta * g
    return OptimizeResult(
        point=x,
        trace=recorder.trace,
        status="completed",
        iterations=max_iters,
        max_param_sq_norm=recorder.max_sq_norm,
        ball_exits=recorder.ball_exits,
    )


def adam(
    objective: Objective,
    gradient: Gradient,
    x0: NDArray[np.float64],
    lr: float = ADAM_LR,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
    batch: Optional[BatchSpec] = None,
    max_iters: int = 1000,
    seed: int = SEED_OPTIMIZER,
    batch_gradient: Optional[BatchGradient] = None,
    decay_factor: float = 1.0,
    decay_every_epochs: int = ADAM_DECAY_EVERY_EPOCHS,
    record_every: int = DEFAULT_RECORD_EVERY,
    radius_sq: Optional[float] = None,
) -> OptimizeResult:
    """Adam with optional mini-batches and a step learning-rate decay.

    With ``batch`` unset every step uses the full gradient and counts as an
    epoch. With ``batch`` set, each epoch visits a fresh seeded permutation
    of the sample indices in chunks of ``batch.batch_size``, and
    ``batch_gradient(x, idx)`` supplies the gradient on those samples. The
    learning rate is multiplied by ``decay_factor`` every
    ``decay_every_epochs`` epochs.

    The trace records the full objective at the point each step is taken from.
    """
    if lr < 0:
        raise InvalidArgumentError(f"learning rate must be >= 0, got {lr}")
    if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
        raise InvalidArgumentError("beta1 and beta2 must lie in [0, 1)")
    if eps <= 0 or decay_factor <= 0 or decay_every_epochs < 1:
        raise InvalidArgumentError("eps, decay_factor and decay_every_epochs must be positive")
    if batch is not None and batch_gradient is None:
        raise InvalidArgumentError("mini-batch Adam needs a batch_gradient callable")

    rng = make_rng(seed)
    recorder = _Recorder(record_every, radius_sq)
    x = np.asarray(x0, dtype=np.float64).ravel().copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    batches: List[NDArray[np.intp]] = []
    epoch = -1

    for t in range(max_iters + 1):
        sq_norm = recorder.visit(t, x)
        if t == max_iters:
            if recorder.due(t, force=True):
                value = _finite(objective(x), "objective", t)
                recorder.record(t, value, float(np.linalg.norm(gradient(x))), False, sq_norm)
            break
        if batch is None:
            epoch += 1
            g = _finite(gradient(x), "gradient", t)
        else:
            if not batches:
                epoch += 1
                order = rng.permutation(batch.n_samples)
                batches = [
                    order[i : i + batch.batch_size]
                    for i in range(0, batch.n_samples, batch.batch_size)
                ]
            g = _finite(batch_gradient(x, batches.pop(0)), "gradient", t)
        if recorder.due(t):
            value = _finite(objective(x), "objective", t)
            recorder.record(t, value, float(np.linalg.norm(g)), False, sq_norm)

        step_lr = lr * decay_factor ** (epoch // decay_every_epochs)
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** (t + 1))
        v_hat = v / (1 - beta2 ** (t + 1))
        x = x - step_lr * m_hat / (np.sqrt(v_hat) + eps)

    return OptimizeResult(
        point=x,
        trace=recorder.trace,
        status="completed",
        iterations=max_iters,
        max_param_sq_norm=recorder.max_sq_norm,
        ball_exits=recorder.ball_exits,
    )


def theorem3_params(
    data: Dataset, eps_target: float, tensor_cap: int = TENSOR_MATRIX_CAP
) -> Theorem3Params:
    """Parameter schedule for training the regularized two-layer objective.

    With sigma = sigma_min([x_j (x) x_j]) and f0 = f(0):
    gamma = (sigma^2 eps / (n d))^(1/2),
    rho = 6 B^4 sqrt(2 (f0 + 1)) (n d / (sigma^2 eps))^(1/4),
    ell = max(3 B^4 2 (f0 + 1) / gamma + Y B^2 + gamma, 1), Delta = f0 + 1.
    PGD is run with eps' = (sigma^2 eps / (n d))^(5/4) / (6 B^4 sqrt(2 (f0 + 1))),
    for which sqrt(rho eps') = gamma.

    Raises:
        InvalidArgumentError: If eps_target is not positive
        DegenerateInstanceError: If X is rank-deficient
    """
    if eps_target <= 0:
        raise InvalidArgumentError(f"target loss must be positive, got {eps_target}")
    tm = x_tensor_matrix(data, 2, cap=tensor_cap)
    if not tm.full_column_rank:
        raise DegenerateInstanceError(
            f"X rank-deficient (sigma_min = {tm.sigma_min!r}, n = {data.n}, d = {data.d})"
        )
    sigma = tm.sigma_min
    n, d, B, Y = data.n, data.d, data.B, data.Y
    f0 = loss_f(TwoLayerParams.zeros(d, 2), data)
    ratio = sigma**2 * eps_target / (n * d)
    lead = 6.0 * B**4 * math.sqrt(2.0 * (f0 + 1.0))
    gamma = math.sqrt(ratio)
    return Theorem3Params(
        sigma=sigma,
        f0=f0,
        rho=lead * ratio ** (-0.25),
        gamma=gamma,
        ell=max(3.0 * B**4 * 2.0 * (f0 + 1.0) / gamma + Y * B**2 + gamma, 1.0),
        delta_f=f0 + 1.0,
        eps=eps_target,
        eps_prime=ratio**1.25 / lead,
        radius_sq=2.0 * (f0 + 1.0) / gamma,
    )


def override_unit(data: Dataset) -> float:
    """Input scale the practical PGD overrides are multiplied by: B, or 1 when B <= 1."""
    return data.B if data.n > 0 and data.B > 1.0 + UNIT_NORM_SLACK else 1.0


def train_two_layer(
    data: Dataset,
    r: int,
    eps_target: float,
    optimizer: str = "pgd",
    seed: int = SEED_OPTIMIZER,
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
    tensor_cap: int = TENSOR_MATRIX_CAP,
    init_scale: float = 0.0,
) -> TrainResult:
    """Train the two-layer network on g = f + gamma/2 ||W||^2, from W = 0 by default.

    theorem3_params() supplies gamma, ell, rho, Delta and eps'; any of
    ``gamma``, ``ell``, ``rho`` and ``pgd_eps`` overrides its value. The
    theorem's ell makes the step tiny on small instances, so desk-scale runs
    usually pass a practical ``ell``.

    Practical ``ell``, ``rho`` and ``pgd_eps`` are stated for inputs with
    B <= 1. On data with a larger B (random features, for instance) they are
    multiplied by B^2, B^3 and B: f on that data at W equals f on the data
    divided by B at B W, so PGD then follows the same path as on the
    rescaled inputs.

    Args:
        data: Training data
        r: Network width
        eps_target: Loss target used in the parameter schedule
        optimizer: "pgd", "gd" or "adam"
        seed: Seed of the optimizer's randomness
        max_iters: Iteration budget
        gamma, ell, rho, pgd_eps: Overrides of the scheduled values (ell, rho
            and pgd_eps for unit-bounded inputs, see above)
        c, delta: PGD constants
        lr: Step size for gd (default 1/ell) and adam (default ADAM_LR)
        batch_size: Adam mini-batch size (full batch when unset)
        decay_factor, decay_every_epochs: Adam step decay
        record_every: Trace density
        init_scale: Standard deviation of a seeded Gaussian start; 0 starts
            at W = 0, where every gradient method without noise stays put

    Raises:
        DegenerateInstanceError: If X is rank-deficient
        NumericalFailureError: If the run diverges
    """
    if optimizer not in OPTIMIZERS:
        raise InvalidArgumentError(f"unknown optimizer {optimizer!r}; choose from {OPTIMIZERS}")
    theorem = theorem3_params(data, eps_target, tensor_cap=tensor_cap)
    gamma_used = theorem.gamma if gamma is None else gamma
    unit = override_unit(data)
    ell_used = theorem.ell if ell is None else ell * unit**2
    radius_sq = 2.0 * theorem.delta_f / gamma_used if gamma_used > 0 else None
    objective = RegularizedObjective(data, r, gamma_used)
    if init_scale < 0:
        raise InvalidArgumentError(f"init_scale must be >= 0, got {init_scale}")
    x0 = np.zeros(objective.dim)
    if init_scale > 0:
        x0 = init_scale * make_rng(seed).standard_normal(objective.dim)
    hyper = None

    if optimizer == "pgd":
        hyper = PgdHyper(
            x0=x0,
            ell=ell_used,
            rho=theorem.rho if rho is None else rho * unit**3,
            eps=theorem.eps_prime if pgd_eps is None else pgd_eps * unit,
            c=c,
            delta=delta,
            delta_f=theorem.delta_f,
        )
        result = pgd(
            objective.value,
            objective.gradient,
            hyper,
            max_iters=max_iters,
            seed=seed,
            record_every=record_every,
            radius_sq=radius_sq,
        )
    elif optimizer == "gd":
        result = gd(
            objective.value,
            objective.gradient,
            x0,
            eta=lr if lr is not None else 1.0 / ell_used,
            max_iters=max_iters,
            record_every=record_every,
            radius_sq=radius_sq,
        )
    else:
        result = adam(
            objective.value,
            objective.gradient,
            x0,
            lr=lr if lr is not None else ADAM_LR,
            batch=BatchSpec(data.n, batch_size) if batch_size else None,
            batch_gradient=objective.gradient,
            max_iters=max_iters,
            seed=seed,
            decay_factor=decay_factor,
            decay_every_epochs=decay_every_epochs,
            record_every=record_every,
            radius_sq=radius_sq,
        )

    params = objective.params(result.point)
    final_loss = loss_f(params, data)
    logger.info("%s finished with status %s and loss %.6g", optimizer, result.status, final_loss)
    return TrainResult(
        params=params,
        result=result,
        theorem=theorem,
        optimizer=optimizer,
        gamma=gamma_used,
        hyper=hyper,
        final_loss=final_loss,
    )
