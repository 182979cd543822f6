"""Two-layer quadratic-activation network for quadnet-landscape.

The network maps x to sum_i a_i (w_i^T x)^2 with fixed signs a (half +1,
half -1). This module provides its empirical risk and derivatives:
- forward(), predict(): Network output
- residuals(), loss_f(), residual_matrix(): Risk and the residual matrix M(W)
- grad_f(), hessian_quadratic(), hessian_full(): Exact derivatives
- loss_g(), grad_g(): The L2-regularized objective
- flatten_weights(), unflatten_weights(): Parameter-vector layout
- RegularizedObjective: Callables over flattened weights for the optimizers

Parameter vectors concatenate the columns w_1, ..., w_r, so entry
k * d + i is W[i, k].
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .constants import HESSIAN_CAP
from .errors import InvalidArgumentError
from .models import Dataset, TwoLayerParams
from .utils import as_vector, check_cap


def _check_data(params: TwoLayerParams, data: Dataset) -> None:
    if data.d != params.d:
        raise InvalidArgumentError(f"data dimension {data.d} does not match W with d={params.d}")
    if data.n < 1:
        raise InvalidArgumentError("dataset is empty")


def _check_gamma(gamma: float) -> None:
    if gamma < 0:
        raise InvalidArgumentError(f"regularization gamma must be >= 0, got {gamma}")


def flatten_weights(W: NDArray[np.float64]) -> NDArray[np.float64]:
    """Concatenate the columns of W into one vector."""
    return np.asarray(W, dtype=np.float64).ravel(order="F")


def unflatten_weights(w: NDArray[np.float64], d: int, r: int) -> NDArray[np.float64]:
    """Inverse of flatten_weights."""
    vec = np.asarray(w, dtype=np.float64)
    if vec.size != d * r:
        raise InvalidArgumentError(f"parameter vector has {vec.size} entries, expected {d * r}")
    return vec.reshape((r, d)).T


def forward(params: TwoLayerParams, x) -> float:
    """Network output sum_i a_i (w_i^T x)^2 for one input.

    Example:
        >>> forward(TwoLayerParams(np.array([[1.0, 0.0, 0.0, 0.0]])), [1.0])
        1.0
    """
    vec = as_vector(x, "x")
    if vec.size != params.d:
        raise InvalidArgumentError(f"x has dimension {vec.size}, expected {params.d}")
    proj = vec @ params.W
    return float(np.dot(params.a, proj * proj))


def predict(params: TwoLayerParams, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """Network outputs for every row of X."""
    proj = X @ params.W
    return (proj * proj) @ params.a


def residuals(params: TwoLayerParams, data: Dataset) -> NDArray[np.float64]:
    """delta_j = prediction on x_j minus y_j."""
    _check_data(params, data)
    return predict(params, data.X) - data.y


def loss_f(params: TwoLayerParams, data: Dataset) -> float:
    """Empirical risk f(W) = (1/4n) sum_j delta_j^2, summed with compensation."""
    delta = residuals(params, data)
    return math.fsum(delta * delta) / (4.0 * data.n)


def _residual_matrix(X: NDArray[np.float64], delta: NDArray[np.float64]) -> NDArray[np.float64]:
    M = X.T @ (delta[:, None] * X) / X.shape[0]
    return 0.5 * (M + M.T)


def residual_matrix(params: TwoLayerParams, data: Dataset) -> NDArray[np.float64]:
    """M(W) = (1/n) sum_j delta_j x_j x_j^T, exactly symmetric."""
    return _residual_matrix(data.X, residuals(params, data))


def _grad(W, a, X, y) -> NDArray[np.float64]:
    proj = X @ W
    delta = (proj * proj) @ a - y
    return (X.T @ (delta[:, None] * proj)) * a / X.shape[0]


def grad_f(params: TwoLayerParams, data: Dataset) -> NDArray[np.float64]:
    """Gradient of f: column k is (a_k / n) sum_j delta_j x_j x_j^T w_k."""
    _check_data(params, data)
    return _grad(params.W, params.a, data.X, data.y)


def hessian_quadratic(
    params: TwoLayerParams, data: Dataset, Z: NDArray[np.float64], gamma: float = 0.0
) -> float:
    """Hessian quadratic form of g = f + gamma/2 ||W||^2 in direction Z.

    Evaluates sum_k a_k z_k^T M z_k + (2/n) sum_j (sum_i a_i w_i^T x_j x_j^T z_i)^2
    + gamma ||Z||_F^2 without assembling the Hessian.
    """
    _check_gamma(gamma)
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape != params.W.shape:
        raise InvalidArgumentError(f"Z has shape {Z.shape}, expected {params.W.shape}")
    M = residual_matrix(params, data)
    first = float(np.dot(params.a, np.einsum("ik,ij,jk->k", Z, M, Z)))
    s = ((data.X @ params.W) * (data.X @ Z)) @ params.a
    second = 2.0 * float(np.dot(s, s)) / data.n
    return first + second + gamma * float(np.sum(Z * Z))


def hessian_full(
    params: TwoLayerParams, data: Dataset, gamma: float = 0.0, cap: int = HESSIAN_CAP
) -> NDArray[np.float64]:
    """Assemble the (d r) x (d r) Hessian of g = f + gamma/2 ||W||^2.

    Block (k1, k2) is (2 a_k1 a_k2 / n) sum_j (x_j^T w_k1)(x_j^T w_k2) x_j x_j^T,
    plus a_k1 M on diagonal blocks, plus gamma I.

    Raises:
        ResourceLimitError: If d * r exceeds ``cap``
    """
    _check_gamma(gamma)
    _check_data(params, data)
    d, r, n = params.d, params.r, data.n
    check_cap(d * r, cap, "Hessian dimension d*r")
    X = data.X
    weighted = (X @ params.W) * params.a  # (n, r)
    V = (weighted[:, :, None] * X[:, None, :]).reshape(n, r * d)
    H = (2.0 / n) * (V.T @ V)
    M = _residual_matrix(X, residuals(params, data))
    for k in range(r):
        block = slice(k * d, (k + 1) * d)
        H[block, block] += params.a[k] * M
    if gamma:
        H[np.diag_indices_from(H)] += gamma
    return 0.5 * (H + H.T)


def loss_g(params: TwoLayerParams, data: Dataset, gamma: float) -> float:
    """Regularized objective g(W) = f(W) + gamma/2 ||W||_F^2."""
    _check_gamma(gamma)
    return loss_f(params, data) + 0.5 * gamma * float(np.sum(params.W * params.W))


def grad_g(params: TwoLayerParams, data: Dataset, gamma: float) -> NDArray[np.float64]:
    """Gradient of g: grad f + gamma W."""
    _check_gamma(gamma)
    return grad_f(params, data) + gamma * params.W


@dataclass
class RegularizedObjective:
    """g = f + gamma/2 ||W||^2 as callables over flattened weights.

    Attributes:
        data: Training data
        r: Network width
        gamma: Regularization weight
    """

    data: Dataset
    r: int
    gamma: float = 0.0

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.data.n < 1:
            raise InvalidArgumentError("dataset is empty")
        self._a = TwoLayerParams.zeros(self.data.d, self.r).a

    @property
    def dim(self) -> int:
        return self.data.d * self.r

    def params(self, w: NDArray[np.float64]) -> TwoLayerParams:
        return TwoLayerParams(unflatten_weights(w, self.data.d, self.r))

    def loss(self, w: NDArray[np.float64]) -> float:
        """f at the flattened weights."""
        return loss_f(self.params(w), self.data)

    def value(self, w: NDArray[np.float64]) -> float:
        """g at the flattened weights."""
        return loss_g(self.params(w), self.data, self.gamma)

    def gradient(self, w: NDArray[np.float64], idx: Optional[NDArray[np.intp]] = None) -> NDArray[np.float64]:
        """grad g at the flattened weights, over the rows ``idx`` if given."""
        W = unflatten_weights(w, self.data.d, self.r)
        if idx is None:
            X, y = self.data.X, self.data.y
        else:
            X, y = self.data.X[idx], self.data.y[idx]
        return flatten_weights(_grad(W, self._a, X, y) + self.gamma * W)
