"""CLI interface for quadnet-landscape.

This module provides the command-line interface for generating datasets,
training the two- and three-layer networks, and certifying the results.
It uses Click for argument parsing and Rich for terminal formatting.

Commands:
    gen: Generate a synthetic dataset or build one from IDX files
    train2: Train the two-layer network
    train3: Train the three-layer network with a frozen random layer
    landscape: Certify saved parameters (Hessian vs residual, stationarity)
    spectra: Smallest singular value and leave-one-out bracket of a matrix

Exit codes: 0 success, 1 usage, 2 degenerate instance, 3 numerical failure.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table
from sparklines import sparklines

from .constants import (
    ADAM_BATCH_SIZE,
    ADAM_DECAY_EVERY_EPOCHS,
    ADAM_DECAY_FACTOR,
    DATASET_FILE,
    DEFAULT_BOUND_DELTA,
    DEFAULT_EPS_THREE_LAYER,
    DEFAULT_EPS_TWO_LAYER,
    DEFAULT_FEATURE_DEGREE,
    DEFAULT_FEATURE_SCALE,
    DEFAULT_MAX_ITERS,
    DEFAULT_RECORD_EVERY,
    DEFAULT_SMOOTHING_VARIANCE,
    EXIT_USAGE,
    FEATURES_FILE,
    HESSIAN_CAP,
    META_FILE,
    MNIST_NUM_CLASSES,
    NOISE_ORDER,
    PARAMS_FILE,
    PGD_C,
    PGD_DELTA,
    REPORT_FILE,
    SEED_DATA,
    SEED_FEATURES,
    SEED_NOISE,
    SEED_OPTIMIZER,
    SPARKLINE_POINTS,
    TENSOR_MATRIX_CAP,
    TRACE_FILE,
)
from .datasets import (
    add_input_noise,
    gen_synthetic,
    load_idx,
    normalize_rows,
    pca_project,
    randomize_labels,
    subsample,
)
from .diagnostics import (
    format_report,
    landscape_report,
    stationarity_check,
    x_tensor_matrix,
)
from .errors import QuadnetError, ResourceLimitError
from .features import conditioning_ratio, identity_layer, train_three_layer
from .models import Dataset, RunConfig, TrainResult, TwoLayerParams
from .optim import OPTIMIZERS, train_two_layer
from .spectra import spectral_sandwich
from .storage import (
    load_dataset,
    load_params,
    save_dataset,
    save_params,
    write_meta,
    write_report,
    write_trace,
)
from .utils import check_cap, format_elapsed, format_float, make_rng

__all__ = ["main"]

console = Console()
logger = logging.getLogger(__name__)


class QuadnetClickError(click.ClickException):
    """A library error reported with its own exit code."""

    def __init__(self, error: QuadnetError):
        super().__init__(str(error))
        self.exit_code = error.exit_code


class QuadnetGroup(click.Group):
    """Command group that maps errors onto the documented exit codes.

    Click reports usage errors with exit code 2, which this tool reserves for
    degenerate instances, so they are moved to 1.
    """

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise
        except QuadnetError as e:
            raise QuadnetClickError(e) from e


def safe_sparkline(values: List[float]) -> Optional[str]:
    """Generate a sparkline string, returning None on failure.

    Long series are thinned to SPARKLINE_POINTS evenly spaced values.
    """
    if not values or len(values) < 2:
        return None
    if len(values) > SPARKLINE_POINTS:
        idx = np.linspace(0, len(values) - 1, SPARKLINE_POINTS).round().astype(int)
        values = [values[i] for i in idx]
    try:
        result = sparklines(values)
        return result[0] if result else None
    except (ValueError, TypeError):
        return None


# Example text for each command
EXAMPLES = {
    "gen": """
Examples:
  quadnet gen --n 300 --d 100 --seed 1 --out runs/synth     # Synthetic dataset
  quadnet gen --n 2 --d 2 --out runs/tiny                   # Tiny dataset, prints sigma_min(X)
  quadnet gen --idx-images train-images-idx3-ubyte.gz \\
      --idx-labels train-labels-idx1-ubyte.gz \\
      --subsample 2000 --pca 100 --noise-std 0.01 --out runs/mnist
""",
    "train2": """
Examples:
  quadnet train2 --n 100 --d 20 --r 42 --eps 1e-4 --ell 20 --out runs/t2
  quadnet train2 --data runs/synth/dataset.bin --optimizer adam --epochs 50
  quadnet train2 --n 20 --d 5 --optimizer gd --max-iters 10000   # Stuck at W = 0
  quadnet train2 --n 20 --d 5 --optimizer gd --init-scale 0.1 --lr 0.05
  quadnet train2 --n 30 --d 8 --trials 4 --out runs/trials
""",
    "train3": """
Examples:
  quadnet train3 --n 40 --d 10 --p 2 --k 14 --v 0.01 --ell 20 --out runs/t3
  quadnet train3 --data runs/mnist/dataset.bin --optimizer adam --scale 0.15 --epochs 50
  quadnet train3 --n 10 --d 5 --identity-features --v 0      # Same run as train2
""",
    "landscape": """
Examples:
  quadnet landscape --params runs/t2/params.bin --data runs/t2/dataset.bin
  quadnet landscape --params runs/t3/params.bin --data runs/t3/features.bin
  quadnet landscape --zero --r 12 --data runs/tiny/dataset.bin   # Report at W = 0
""",
    "spectra": """
Examples:
  quadnet spectra --dataset runs/synth/dataset.bin --order 2
  quadnet spectra --features runs/t3/features.bin
  quadnet spectra --random 50 10 --seed 7
  quadnet spectra --identity 4
""",
}


def show_examples(command: str) -> None:
    """Display example usage for a command."""
    if command in EXAMPLES:
        console.print(EXAMPLES[command])
    else:
        console.print(f"[yellow]No examples available for '{command}'[/yellow]")


def _setup_logging(verbose: bool, debug: bool) -> None:
    level = logging.DEBUG if debug else logging.INFO if verbose else logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


@click.group(cls=QuadnetGroup)
@click.version_option()
@click.option("--verbose", "-v", is_flag=True, help="Log progress (INFO)")
@click.option("--debug", is_flag=True, help="Log every perturbation (DEBUG)")
def main(verbose: bool, debug: bool):
    """Train quadratic-activation networks and certify their loss landscape.

    Runs write their artifacts (dataset.bin, params.bin, trace.csv,
    report.txt, meta.txt) into the --out directory.
    """
    _setup_logging(verbose, debug)


# =============================================================================
# Shared option groups
# =============================================================================


def _data_options(f):
    f = click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="Dataset file (otherwise a synthetic one is generated)")(f)
    f = click.option("--n", type=click.IntRange(min=1), default=40, show_default=True, help="Synthetic sample count")(f)
    f = click.option("--d", type=click.IntRange(min=1), default=10, show_default=True, help="Synthetic input dimension")(f)
    f = click.option("--seed-data", type=int, default=SEED_DATA, show_default=True, help="Seed of the synthetic data")(f)
    f = click.option("--random-labels", is_flag=True, help="Replace labels by uniform integers 0-9")(f)
    return f


def _optimizer_options(f):
    options = [
        click.option("--optimizer", type=click.Choice(OPTIMIZERS), default="pgd", show_default=True),
        click.option("--max-iters", type=click.IntRange(min=1), default=DEFAULT_MAX_ITERS, show_default=True),
        click.option("--record-every", type=click.IntRange(min=1), default=DEFAULT_RECORD_EVERY, show_default=True),
        click.option("--ell", type=float, default=None, help="Gradient Lipschitz constant for unit-norm inputs, scaled by B^2 above B = 1 (default: scheduled value)"),
        click.option("--rho", type=float, default=None, help="Hessian Lipschitz constant for unit-norm inputs, scaled by B^3 (default: scheduled value)"),
        click.option("--gamma", type=float, default=None, help="Regularization weight (default: scheduled value)"),
        click.option("--pgd-eps", type=float, default=None, help="PGD accuracy for unit-norm inputs, scaled by B (default: scheduled value)"),
        click.option("--c", "c_const", type=float, default=PGD_C, show_default=True, help="PGD step constant"),
        click.option("--delta", type=float, default=PGD_DELTA, show_default=True, help="PGD failure probability"),
        click.option("--lr", type=float, default=None, help="Step size for gd/adam"),
        click.option("--batch-size", type=click.IntRange(min=1), default=None, help=f"Adam mini-batch size (e.g. {ADAM_BATCH_SIZE})"),
        click.option("--epochs", type=click.IntRange(min=1), default=None, help="Adam epochs (overrides --max-iters)"),
        click.option("--decay-factor", type=float, default=ADAM_DECAY_FACTOR, show_default=True),
        click.option("--decay-every", type=click.IntRange(min=1), default=ADAM_DECAY_EVERY_EPOCHS, show_default=True),
        click.option("--seed-optimizer", type=int, default=SEED_OPTIMIZER, show_default=True),
        click.option("--init-scale", type=click.FloatRange(min=0.0), default=0.0, show_default=True, help="Std of a random starting W (0 starts at W = 0)"),
        click.option("--trials", type=click.IntRange(min=1), default=1, show_default=True, help="Independent seeded trials, run concurrently"),
        click.option("--hessian-cap", type=click.IntRange(min=1), default=HESSIAN_CAP, show_default=True),
        click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("."), show_default=True),
        click.option("--example", is_flag=True, help="Show usage examples"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _load_or_generate(data_path: Optional[Path], n: int, d: int, seed: int, random_labels: bool) -> Dataset:
    data = load_dataset(data_path) if data_path else gen_synthetic(n, d, seed)
    if random_labels:
        data = randomize_labels(data, seed)
    return data


def _iteration_budget(opts: Dict[str, Any], n: int) -> int:
    if opts["optimizer"] == "adam" and opts["epochs"]:
        per_epoch = math.ceil(n / opts["batch_size"]) if opts["batch_size"] else 1
        return opts["epochs"] * per_epoch
    return opts["max_iters"]


def _train_kwargs(opts: Dict[str, Any], n: int) -> Dict[str, Any]:
    return dict(
        optimizer=opts["optimizer"],
        max_iters=_iteration_budget(opts, n),
        gamma=opts["gamma"],
        ell=opts["ell"],
        rho=opts["rho"],
        pgd_eps=opts["pgd_eps"],
        c=opts["c_const"],
        delta=opts["delta"],
        lr=opts["lr"],
        batch_size=opts["batch_size"],
        decay_factor=opts["decay_factor"] if opts["optimizer"] == "adam" else 1.0,
        decay_every_epochs=opts["decay_every"],
        record_every=opts["record_every"],
        init_scale=opts["init_scale"],
    )


def _is_stuck(train: TrainResult) -> bool:
    """A flat trace that ends above the loss target; a run that starts optimal is not stuck."""
    values = [rec.objective for rec in train.trace]
    flat = len(values) > 1 and max(values) - min(values) < 1e-12
    return flat and train.final_loss > train.theorem.eps


def _derived(train: TrainResult) -> Dict[str, Any]:
    derived: Dict[str, Any] = {"gamma": train.gamma, "noise_order": NOISE_ORDER}
    derived.update(format_report(train.theorem, prefix="theorem."))
    if train.result.derived is not None:
        derived.update(format_report(train.result.derived, prefix="pgd."))
        derived["pgd.t_steps"] = train.result.derived.t_steps
    if train.hyper is not None:
        derived.update({"pgd.ell": train.hyper.ell, "pgd.rho": train.hyper.rho, "pgd.eps": train.hyper.eps})
    return derived


def _train_report(train: TrainResult, data: Dataset, hessian_cap: int) -> Dict[str, Any]:
    report: Dict[str, Any] = {
        "final_loss": train.final_loss,
        "optimizer": train.optimizer,
        "status": train.result.status,
        "iterations": train.result.iterations,
        "perturbations": train.result.perturbations,
        "max_param_sq_norm": train.result.max_param_sq_norm,
        "ball_exits": train.result.ball_exits,
        "stuck": _is_stuck(train),
    }
    params = train.params
    if params.d * params.r <= hessian_cap and params.r >= 2 * params.d + 2:
        report.update(format_report(landscape_report(params, data, cap=hessian_cap), prefix="landscape."))
        if train.hyper is not None:
            stat = stationarity_check(params, data, train.gamma, train.hyper.eps, train.hyper.rho, cap=hessian_cap)
            report.update(format_report(stat, prefix="stationarity."))
    else:
        logger.info("skipping the landscape report (d*r = %d)", params.d * params.r)
    return report


def _write_run(out: Path, config: RunConfig, data: Dataset, train: TrainResult, report: Dict[str, Any], R=None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(out / DATASET_FILE, data)
    save_params(out / PARAMS_FILE, train.params.W, R)
    write_trace(out / TRACE_FILE, train.trace)
    write_report(out / REPORT_FILE, report)
    write_meta(out / META_FILE, config.to_meta())


def _print_summary(title: str, train: TrainResult, elapsed: float, extra: Optional[Dict[str, Any]] = None) -> None:
    table = Table(title=title, show_header=False)
    table.add_column("Key", style="cyan")
    table.add_column("Value", style="green")
    rows = {
        "optimizer": train.optimizer,
        "status": train.result.status,
        "iterations": train.result.iterations,
        "perturbations": train.result.perturbations,
        "final loss f(W)": format_float(train.final_loss),
        "gamma": format_float(train.gamma),
        "max ||W||_F^2": format_float(train.result.max_param_sq_norm),
        "elapsed": format_elapsed(elapsed),
    }
    rows.update(extra or {})
    for key, value in rows.items():
        table.add_row(key, str(value))
    console.print(table)
    spark = safe_sparkline([rec.objective for rec in train.trace])
    if spark:
        console.print(f"objective  {spark}")
    if train.optimizer == "gd" and _is_stuck(train):
        console.print(
            f"[yellow]gd is stuck at W = 0: the gradient vanishes there and the loss stays "
            f"at f(0) = {format_float(train.final_loss)}[/yellow]"
        )


def _run_trials(trials: int, out: Path, run_one: Callable[[Path, int], Dict[str, Any]]) -> None:
    """Run ``run_one(out_dir, offset)`` once, or ``trials`` times in trial-XXX subdirectories."""
    if trials == 1:
        run_one(out, 0)
        return
    with ThreadPoolExecutor() as pool:
        futures = [pool.submit(run_one, out / f"trial-{i:03d}", i) for i in range(trials)]
        results = [future.result() for future in futures]
    table = Table(title=f"Trials ({trials})")
    table.add_column("Trial", justify="right", style="cyan")
    table.add_column("Status", style="yellow")
    table.add_column("Final loss", justify="right", style="green")
    for i, row in enumerate(results):
        table.add_row(str(i), str(row["status"]), format_float(row["final_loss"]))
    console.print(table)


# =============================================================================
# Commands
# =============================================================================


@main.command()
@click.option("--n", type=click.IntRange(min=1), default=100, show_default=True, help="Sample count")
@click.option("--d", type=click.IntRange(min=1), default=20, show_default=True, help="Input dimension")
@click.option("--seed", type=int, default=SEED_DATA, show_default=True, help="Data seed")
@click.option("--idx-images", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--idx-labels", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--subsample", "subsample_n", type=click.IntRange(min=1), default=None, help="Keep this many IDX samples")
@click.option("--pca", "pca_dims", type=click.IntRange(min=1), default=None, help="Project IDX images onto this many components")
@click.option("--noise-std", type=float, default=0.0, show_default=True, help="Input noise std, added after normalization")
@click.option("--random-labels", is_flag=True, help=f"Replace labels by uniform integers 0-{MNIST_NUM_CLASSES - 1}")
@click.option("--tensor-cap", type=click.IntRange(min=1), default=TENSOR_MATRIX_CAP, show_default=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("."), show_default=True)
@click.option("--example", is_flag=True, help="Show usage examples")
@click.pass_context
def gen(ctx, n, d, seed, idx_images, idx_labels, subsample_n, pca_dims, noise_std, random_labels, tensor_cap, out, example):
    """Generate a dataset and summarize it (n, d, B, Y, sigma_min(X))."""
    if example:
        show_examples("gen")
        return
    if (idx_images is None) != (idx_labels is None):
        raise click.UsageError("--idx-images and --idx-labels go together")
    if noise_std < 0:
        raise click.BadParameter("must be >= 0", param_hint="--noise-std")

    if idx_images is not None:
        data = load_idx(idx_images, idx_labels)
        if subsample_n is not None:
            data = subsample(data, subsample_n, seed)
        if pca_dims is not None:
            data, projection = pca_project(data, pca_dims)
            logger.info("PCA keeps %.4f of the variance", float(projection.explained_variance_ratio.sum()))
        data = normalize_rows(data)
    else:
        data = gen_synthetic(n, d, seed)
    if noise_std > 0:
        data = add_input_noise(data, noise_std, SEED_NOISE)
    if random_labels:
        data = randomize_labels(data, seed)

    summary: Dict[str, Any] = {"n": data.n, "d": data.d, "B": data.B, "Y": data.Y}
    try:
        check_cap(data.d**2 * data.n, tensor_cap, "tensor matrix")
        tm = x_tensor_matrix(data, 2, cap=tensor_cap)
        summary["sigma_min_X"] = tm.sigma_min if tm.full_column_rank else 0.0
    except ResourceLimitError:
        logger.info("sigma_min(X) skipped: d^2 n = %d exceeds the cap", data.d**2 * data.n)

    out.mkdir(parents=True, exist_ok=True)
    save_dataset(out / DATASET_FILE, data)
    write_report(out / REPORT_FILE, summary)
    config = RunConfig("gen", options=dict(ctx.params), seeds={"data": seed, "noise": SEED_NOISE}, derived={"noise_order": NOISE_ORDER})
    write_meta(out / META_FILE, config.to_meta())

    table = Table(title="Dataset", show_header=False)
    table.add_column("Key", style="cyan")
    table.add_column("Value", style="green")
    for key, value in summary.items():
        table.add_row(key, format_float(value) if isinstance(value, float) else str(value))
    console.print(table)
    console.print(f"[green]Wrote {out / DATASET_FILE}[/green]")


@main.command()
@_data_options
@click.option("--r", type=click.IntRange(min=2), default=None, help="Width (default 2d+2)")
@click.option("--eps", type=float, default=DEFAULT_EPS_TWO_LAYER, show_default=True, help="Target loss")
@click.option("--force", is_flag=True, help="Allow widths below 2d+2")
@_optimizer_options
@click.pass_context
def train2(ctx, data_path, n, d, seed_data, random_labels, r, eps, force, **opts):
    """Train the two-layer network on the regularized loss, from W = 0 by default."""
    if opts["example"]:
        show_examples("train2")
        return
    if eps <= 0:
        raise click.BadParameter("must be positive", param_hint="--eps")
    data = _load_or_generate(data_path, n, d, seed_data, random_labels)
    width = r if r is not None else 2 * data.d + 2
    if width % 2:
        raise click.BadParameter("width must be even", param_hint="--r")
    if width < 2 * data.d + 2 and not force:
        raise click.UsageError(f"--r {width} is below 2d+2 = {2 * data.d + 2}; pass --force to run anyway")

    def run_one(out: Path, offset: int) -> Dict[str, Any]:
        seed = opts["seed_optimizer"] + offset
        start = time.monotonic()
        train = train_two_layer(data, width, eps, seed=seed, **_train_kwargs(opts, data.n))
        report = _train_report(train, data, opts["hessian_cap"])
        config = RunConfig("train2", options=dict(ctx.params), seeds={"data": seed_data, "optimizer": seed}, derived=_derived(train))
        _write_run(out, config, data, train, report)
        _print_summary(f"Two-layer training (n={data.n}, d={data.d}, r={width})", train, time.monotonic() - start)
        return report

    _run_trials(opts["trials"], opts["out"], run_one)


@main.command()
@_data_options
@click.option("--p", type=click.IntRange(min=1), default=DEFAULT_FEATURE_DEGREE, show_default=True, help="Feature degree")
@click.option("--k", type=click.IntRange(min=1), default=None, help="Feature count (default 2 ceil(sqrt(n)))")
@click.option("--v", type=float, default=DEFAULT_SMOOTHING_VARIANCE, show_default=True, help="Smoothing variance")
@click.option("--scale", type=float, default=DEFAULT_FEATURE_SCALE, show_default=True, help="Std of the random layer entries")
@click.option("--identity-features", is_flag=True, help="Use R = I, p = 1 (reduces to train2)")
@click.option("--eps", type=float, default=DEFAULT_EPS_THREE_LAYER, show_default=True, help="Target loss")
@click.option("--seed-features", type=int, default=SEED_FEATURES, show_default=True)
@click.option("--seed-noise", type=int, default=SEED_NOISE, show_default=True)
@click.option("--bound-delta", type=float, default=DEFAULT_BOUND_DELTA, show_default=True, help="Failure probability in reported bounds")
@_optimizer_options
@click.pass_context
def train3(ctx, data_path, n, d, seed_data, random_labels, p, k, v, scale, identity_features, eps, seed_features, seed_noise, bound_delta, **opts):
    """Train the three-layer network: frozen random layer, trained middle layer."""
    if opts["example"]:
        show_examples("train3")
        return
    if eps <= 0:
        raise click.BadParameter("must be positive", param_hint="--eps")
    if v < 0:
        raise click.BadParameter("must be >= 0", param_hint="--v")
    data = _load_or_generate(data_path, n, d, seed_data, random_labels)
    layer = identity_layer(data.d) if identity_features else None

    def run_one(out: Path, offset: int) -> Dict[str, Any]:
        seeds = {
            "data": seed_data,
            "features": seed_features + offset,
            "noise": seed_noise + offset,
            "optimizer": opts["seed_optimizer"] + offset,
        }
        start = time.monotonic()
        result = train_three_layer(
            data,
            p=p,
            k=k,
            eps_target=eps,
            v=v,
            seed_features=seeds["features"],
            seed_noise=seeds["noise"],
            seed_optimizer=seeds["optimizer"],
            scale=scale,
            layer=layer,
            bound_delta=bound_delta,
            **_train_kwargs(opts, data.n),
        )
        report = _train_report(result.train, result.feature_data, opts["hessian_cap"])
        report.update(format_report(result.certificate, prefix="z."))
        report.update(format_report(result.norm_report, prefix="feature_norm."))
        try:
            report["z.conditioning_ratio"] = conditioning_ratio(result.layer, result.smoothed)
        except ResourceLimitError:
            logger.info("conditioning ratio skipped: input tensor matrix exceeds the cap")

        derived = _derived(result.train)
        derived.update({"k": result.layer.k, "p": result.layer.p, "r": 2 * result.layer.k + 2})
        config = RunConfig("train3", options=dict(ctx.params), seeds=seeds, derived=derived)
        _write_run(out, config, data, result.train, report, R=result.layer.R)
        save_dataset(out / FEATURES_FILE, result.feature_data)

        _print_summary(
            f"Three-layer training (n={data.n}, d={data.d}, k={result.layer.k}, p={result.layer.p})",
            result.train,
            time.monotonic() - start,
            extra={"sigma_min(Z)": format_float(result.certificate.sigma_min)},
        )
        cert = result.certificate
        console.print(
            Panel(
                f"sigma_min(Z) = {format_float(cert.sigma_min)}\n"
                f"theory bound = {format_float(cert.theory_bound)}\n"
                f"max ||z_j|| = {format_float(result.norm_report.max_norm)} "
                f"(bound {format_float(result.norm_report.bound)})",
                title="Feature certificates",
                border_style="blue",
            )
        )
        return report

    _run_trials(opts["trials"], opts["out"], run_one)


@main.command()
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="params.bin from a training run")
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="dataset.bin (two-layer) or features.bin (three-layer)")
@click.option("--zero", is_flag=True, help="Evaluate at W = 0 instead of saved parameters")
@click.option("--r", type=click.IntRange(min=2), default=None, help="Width for --zero (default 2d+2)")
@click.option("--gamma", type=float, default=0.0, show_default=True, help="Regularization weight for stationarity")
@click.option("--eps", type=float, default=None, help="Stationarity accuracy")
@click.option("--rho", type=float, default=None, help="Hessian Lipschitz constant for stationarity")
@click.option("--hessian-cap", type=click.IntRange(min=1), default=HESSIAN_CAP, show_default=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None, help="Directory for report.txt")
@click.option("--example", is_flag=True, help="Show usage examples")
@click.pass_context
def landscape(ctx, params_path, data_path, zero, r, gamma, eps, rho, hessian_cap, out, example):
    """Compare lambda_min of the Hessian with -||M(W)|| and bound the loss."""
    if example:
        show_examples("landscape")
        return
    data = load_dataset(data_path)
    if zero:
        params = TwoLayerParams.zeros(data.d, r if r is not None else 2 * data.d + 2)
    elif params_path is None:
        raise click.UsageError("pass --params or --zero")
    else:
        W, _ = load_params(params_path)
        params = TwoLayerParams(W)

    report = format_report(landscape_report(params, data, cap=hessian_cap))
    if eps is not None and rho is not None:
        report.update(format_report(stationarity_check(params, data, gamma, eps, rho, cap=hessian_cap), prefix="stationarity."))

    table = Table(title=f"Landscape (d={params.d}, r={params.r}, n={data.n})", show_header=False)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    for key, value in report.items():
        table.add_row(key, format_float(value) if isinstance(value, float) else str(value))
    console.print(table)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_report(out / REPORT_FILE, report)
        write_meta(out / META_FILE, RunConfig("landscape", options=dict(ctx.params)).to_meta())
        console.print(f"[green]Wrote {out / REPORT_FILE}[/green]")


@main.command()
@click.option("--dataset", "dataset_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="Measure X = [x_j^(x)order]")
@click.option("--order", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--features", "features_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="Measure Z = [z_j (x) z_j] from features.bin")
@click.option("--random", "random_shape", type=click.IntRange(min=1), nargs=2, default=None, help="Gaussian M x N matrix")
@click.option("--identity", type=click.IntRange(min=1), default=None, help="Identity matrix of this size")
@click.option("--seed", type=int, default=SEED_DATA, show_default=True)
@click.option("--tensor-cap", type=click.IntRange(min=1), default=TENSOR_MATRIX_CAP, show_default=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None, help="Directory for report.txt")
@click.option("--example", is_flag=True, help="Show usage examples")
@click.pass_context
def spectra(ctx, dataset_path, order, features_path, random_shape, identity, seed, tensor_cap, out, example):
    """Smallest singular value and its leave-one-out bracket l/sqrt(n) <= sigma <= l."""
    if example:
        show_examples("spectra")
        return
    sources = [dataset_path, features_path, random_shape, identity]
    if sum(source is not None for source in sources) != 1:
        raise click.UsageError("pass exactly one of --dataset, --features, --random, --identity")

    if dataset_path is not None:
        matrix = x_tensor_matrix(load_dataset(dataset_path), order, cap=tensor_cap).matrix
        label = f"X (order {order})"
    elif features_path is not None:
        matrix = x_tensor_matrix(load_dataset(features_path), 2, cap=tensor_cap).matrix
        label = "Z"
    elif random_shape is not None:
        rows, cols = random_shape
        if rows < cols:
            raise click.BadParameter("need M >= N for a tall matrix", param_hint="--random")
        matrix = make_rng(seed).standard_normal((rows, cols))
        label = f"Gaussian {rows}x{cols}"
    else:
        matrix = np.eye(identity)
        label = f"I_{identity}"

    if matrix.shape[0] < matrix.shape[1]:
        raise click.UsageError(f"{label} has more columns than rows ({matrix.shape}); the bracket needs a tall matrix")
    report = format_report(spectral_sandwich(matrix))

    table = Table(title=f"Spectral sandwich: {label} {matrix.shape[0]}x{matrix.shape[1]}", show_header=False)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    for key, value in report.items():
        table.add_row(key, format_float(value) if isinstance(value, float) else str(value))
    console.print(table)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_report(out / REPORT_FILE, report)
        seeds = {"matrix": seed} if random_shape is not None else {}
        write_meta(out / META_FILE, RunConfig("spectra", options=dict(ctx.params), seeds=seeds).to_meta())
        console.print(f"[green]Wrote {out / REPORT_FILE}[/green]")
