"""quadnet-landscape - Loss landscape and training of quadratic-activation networks.

This package trains overparametrized networks with quadratic activations by
perturbed gradient descent and checks, on concrete instances, the facts that
make it work: every local minimum is global, the loss is bounded by the
residual matrix, and a frozen random polynomial layer keeps the features
well conditioned under input smoothing.

Modules:
    models: Data classes for datasets, parameters, runs and reports
    constants: Tolerances, caps, seeds and optimizer defaults
    errors: Exception hierarchy with CLI exit codes
    spectra: Tensor powers, symmetric tensors and dense spectral kernels
    network: Two-layer network, its loss and exact derivatives
    optim: Perturbed gradient descent, GD, Adam and the training driver
    features: Random feature layer, smoothing and three-layer training
    diagnostics: Landscape, stationarity and regularity certificates
    datasets: Synthetic data, IDX files, PCA and preprocessing
    storage: Trace, parameter, dataset and report files
    cli: Command-line interface

Example:
    >>> from quadnet_landscape import gen_synthetic, train_two_layer
    >>> data = gen_synthetic(20, 5, seed=1)
    >>> result = train_two_layer(data, r=12, eps_target=1e-4, ell=20.0)
    >>> print(result.result.status, result.final_loss)
"""

__version__ = "0.1.0"

# Re-export commonly used symbols for convenience
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
    check_bounded_iterates,
    check_descent,
    empirical_lipschitz_probe,
    escape_direction,
    landscape_report,
    smoothness_constants,
    stationarity_check,
    x_tensor_matrix,
)
from .errors import (
    DegenerateInstanceError,
    DomainError,
    FormatError,
    InvalidArgumentError,
    NumericalFailureError,
    PreconditionError,
    PropertyFailureError,
    QuadnetError,
    ResourceLimitError,
)
from .features import (
    feature_map,
    feature_norm_bound,
    make_layer,
    smooth_inputs,
    train_three_layer,
    z_singular_certificate,
    z_tensor_matrix,
)
from .models import (
    Dataset,
    LandscapeReport,
    OptimizeResult,
    PgdDerived,
    PgdHyper,
    RandomFeatureLayer,
    SmoothedDataset,
    SymTensorRV,
    Theorem3Params,
    ThreeLayerResult,
    TraceRecord,
    TrainResult,
    TwoLayerParams,
)
from .network import (
    forward,
    grad_f,
    grad_g,
    hessian_full,
    hessian_quadratic,
    loss_f,
    loss_g,
    residual_matrix,
)
from .optim import adam, derive_params, gd, pgd, theorem3_params, train_two_layer
from .spectra import (
    expand_symmetric,
    kron,
    leave_one_out,
    min_eigenvalue_sym,
    reduce_symmetric,
    smallest_singular,
    spectral_sandwich,
    tensor_power,
)
from .storage import load_params, read_trace, save_params, write_trace

__all__ = [
    # Data models
    "Dataset",
    "SmoothedDataset",
    "TwoLayerParams",
    "RandomFeatureLayer",
    "SymTensorRV",
    "PgdHyper",
    "PgdDerived",
    "Theorem3Params",
    "TraceRecord",
    "OptimizeResult",
    "TrainResult",
    "ThreeLayerResult",
    "LandscapeReport",
    # Errors
    "QuadnetError",
    "InvalidArgumentError",
    "DomainError",
    "ResourceLimitError",
    "PreconditionError",
    "DegenerateInstanceError",
    "NumericalFailureError",
    "FormatError",
    "PropertyFailureError",
    # Spectra
    "tensor_power",
    "kron",
    "reduce_symmetric",
    "expand_symmetric",
    "smallest_singular",
    "leave_one_out",
    "spectral_sandwich",
    "min_eigenvalue_sym",
    # Network
    "forward",
    "loss_f",
    "loss_g",
    "residual_matrix",
    "grad_f",
    "grad_g",
    "hessian_quadratic",
    "hessian_full",
    # Optimizers
    "derive_params",
    "pgd",
    "gd",
    "adam",
    "theorem3_params",
    "train_two_layer",
    # Features
    "smooth_inputs",
    "make_layer",
    "feature_map",
    "z_tensor_matrix",
    "z_singular_certificate",
    "feature_norm_bound",
    "train_three_layer",
    # Diagnostics
    "x_tensor_matrix",
    "landscape_report",
    "stationarity_check",
    "escape_direction",
    "smoothness_constants",
    "empirical_lipschitz_probe",
    "check_descent",
    "check_bounded_iterates",
    # Data
    "gen_synthetic",
    "load_idx",
    "pca_project",
    "normalize_rows",
    "add_input_noise",
    "randomize_labels",
    "subsample",
    # Files
    "write_trace",
    "read_trace",
    "save_params",
    "load_params",
]
