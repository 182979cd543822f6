"""Dense tensor and spectral kernels for quadnet-landscape.

This module provides the linear-algebra primitives the certificates rest on:
- tensor_power(), tensor_power_rows(): p-th tensor power of vectors
- kron(): Kronecker product with a size cap
- reduce_symmetric(), expand_symmetric(): Reduced vectorized form of
  symmetric tensors
- smallest_singular(), leave_one_out(), spectral_sandwich(): Column
  conditioning of tall matrices
- min_eigenpair_sym(), min_eigenvalue_sym(), spectral_norm_sym():
  Dense symmetric eigenproblems

All functions are pure; dense LAPACK routines from scipy.linalg are used
throughout.
"""

import itertools
import math
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .constants import EIGEN_RESIDUAL_TOL, KRON_CAP, MAX_TENSOR_ORDER, SYMMETRY_TOL
from .errors import DomainError, InvalidArgumentError, NumericalFailureError
from .models import SpectralSandwich, SymTensorRV
from .utils import as_matrix, as_vector, check_cap

SANDWICH_SLACK = 1e-8


def _check_order(p: int) -> None:
    if p < 1:
        raise InvalidArgumentError(f"tensor order must be at least 1, got {p}")
    if p > MAX_TENSOR_ORDER:
        raise InvalidArgumentError(f"tensor order {p} exceeds the supported maximum {MAX_TENSOR_ORDER}")


def tensor_power(x, p: int) -> NDArray[np.float64]:
    """Return x (x) x (x) ... (x) x (p factors), flattened row-major.

    Entry (i_1, ..., i_p) sits at flat index sum_k i_k d^(p-k) and equals
    prod_k x_{i_k}.

    Example:
        >>> tensor_power([1.0, 2.0], 2)
        array([1., 2., 2., 4.])
    """
    _check_order(p)
    vec = as_vector(x, "x")
    out = vec
    for _ in range(p - 1):
        out = np.multiply.outer(out, vec).ravel()
    return out.copy() if p == 1 else out


def tensor_power_rows(X, p: int) -> NDArray[np.float64]:
    """Row-wise tensor power: row j of the result is tensor_power(X[j], p)."""
    _check_order(p)
    mat = np.asarray(X, dtype=np.float64)
    n = mat.shape[0]
    out = mat.copy()
    for _ in range(p - 1):
        out = (out[:, :, None] * mat[:, None, :]).reshape(n, -1)
    return out


def kron(A, B, cap: int = KRON_CAP) -> NDArray[np.float64]:
    """Kronecker product (A (x) B)[(i1,i2),(j1,j2)] = A[i1,j1] * B[i2,j2].

    Raises:
        InvalidArgumentError: If either factor is empty or non-finite, or the
            product would exceed ``cap`` entries
    """
    a = as_matrix(A, "A")
    b = as_matrix(B, "B")
    size = a.size * b.size
    if size > cap:
        raise InvalidArgumentError(f"Kronecker product would have {size} entries (cap {cap})")
    return np.kron(a, b)


@lru_cache(maxsize=64)
def _symmetric_index(d: int, p: int) -> Tuple[Tuple[Tuple[int, ...], ...], NDArray[np.intp]]:
    """Sorted index tuples in order, and for every flat index its tuple position."""
    combos = tuple(itertools.combinations_with_replacement(range(d), p))
    position: Dict[Tuple[int, ...], int] = {c: i for i, c in enumerate(combos)}
    flat = np.empty(d**p, dtype=np.intp)
    for flat_index, multi in enumerate(itertools.product(range(d), repeat=p)):
        flat[flat_index] = position[tuple(sorted(multi))]
    flat.setflags(write=False)
    return combos, flat


def symmetric_dimension(d: int, p: int) -> int:
    """Dimension C(p+d-1, p) of the space of symmetric order-p tensors over R^d."""
    return math.comb(p + d - 1, p)


def reduce_symmetric(T, d: int, p: int, tol: float = SYMMETRY_TOL) -> SymTensorRV:
    """Reduce a symmetric tensor to its coordinates in the symmetric basis.

    Basis element i is the sum of e_{j_1} (x) ... (x) e_{j_p} over every
    distinct permutation of the i-th sorted index tuple, so the coefficient
    is the tensor's (common) value at any of those permutations.

    Args:
        T: Flattened tensor of length d**p
        d: Dimension
        p: Order
        tol: Absolute tolerance for the symmetry check

    Raises:
        InvalidArgumentError: If the length does not match d**p
        DomainError: If T is not symmetric; the message names the first
            index pair whose values differ by more than ``tol``

    Example:
        >>> reduce_symmetric([1.0, 1.0, 1.0, 1.0], 2, 2).coeffs
        array([1., 1., 1.])
    """
    _check_order(p)
    flat = as_vector(T, "T")
    if d < 1 or flat.size != d**p:
        raise InvalidArgumentError(f"tensor length {flat.size} does not equal d**p = {d}**{p}")
    tensor = flat.reshape((d,) * p)
    for axis in range(p - 1):
        swapped = np.swapaxes(tensor, axis, axis + 1)
        bad = np.argwhere(np.abs(tensor - swapped) > tol)
        if bad.size:
            first = tuple(int(i) for i in bad[0])
            partner = list(first)
            partner[axis], partner[axis + 1] = partner[axis + 1], partner[axis]
            raise DomainError(
                f"tensor is not symmetric: T{first} != T{tuple(partner)} "
                f"({tensor[first]!r} vs {tensor[tuple(partner)]!r})"
            )
    combos, _ = _symmetric_index(d, p)
    coeffs = np.array([tensor[c] for c in combos], dtype=np.float64)
    return SymTensorRV(d=d, p=p, coeffs=coeffs)


def expand_symmetric(rv: SymTensorRV) -> NDArray[np.float64]:
    """Inverse of reduce_symmetric: the full flattened d**p tensor."""
    _, flat = _symmetric_index(rv.d, rv.p)
    return rv.coeffs[flat]


def smallest_singular(M) -> float:
    """Smallest of the min(rows, cols) singular values of M.

    Raises:
        InvalidArgumentError: If M is empty or has non-finite entries
    """
    mat = as_matrix(M, "M")
    return float(scipy.linalg.svdvals(mat).min())


def leave_one_out(M, rank_rtol: Optional[float] = None) -> float:
    """Leave-one-out distance of the columns of a tall matrix.

    For each column, the residual of its least-squares projection onto the
    span of the other columns; the minimum over columns is returned. The
    span is taken from a column-pivoted QR, so rank-deficient remainders are
    handled exactly (a column inside the span has distance 0).

    Satisfies l / sqrt(n) <= smallest_singular(M) <= l.

    Raises:
        InvalidArgumentError: If M has fewer rows than columns
    """
    mat = as_matrix(M, "M")
    m, n = mat.shape
    if m < n:
        raise InvalidArgumentError(f"leave-one-out needs rows >= cols, got {m}x{n}")
    if rank_rtol is None:
        rank_rtol = max(m, n) * np.finfo(np.float64).eps
    best = math.inf
    for i in range(n):
        column = mat[:, i]
        others = np.delete(mat, i, axis=1)
        if others.shape[1] == 0:
            distance = float(np.linalg.norm(column))
        else:
            q, r, _ = scipy.linalg.qr(others, mode="economic", pivoting=True)
            diag = np.abs(np.diag(r))
            rank = int(np.sum(diag > rank_rtol * diag[0])) if diag.size and diag[0] > 0 else 0
            basis = q[:, :rank]
            residual = column - basis @ (basis.T @ column)
            distance = float(np.linalg.norm(residual))
        best = min(best, distance)
    return best


def spectral_sandwich(M) -> SpectralSandwich:
    """Measure sigma_min and the leave-one-out bracket l/sqrt(n) <= sigma_min <= l."""
    mat = as_matrix(M, "M")
    sigma = smallest_singular(mat)
    distance = leave_one_out(mat)
    lower = distance / math.sqrt(mat.shape[1])
    holds = lower - SANDWICH_SLACK <= sigma <= distance + SANDWICH_SLACK
    return SpectralSandwich(
        sigma_min=sigma, leave_one_out=distance, lower=lower, upper=distance, holds=holds
    )


def _symmetrized(H, tol: float) -> NDArray[np.float64]:
    mat = as_matrix(H, "H")
    if mat.shape[0] != mat.shape[1]:
        raise InvalidArgumentError(f"matrix must be square, got shape {mat.shape}")
    asym = float(np.max(np.abs(mat - mat.T)))
    if asym > tol:
        raise DomainError(f"matrix is not symmetric (max |H - H^T| = {asym!r})")
    return 0.5 * (mat + mat.T)


def min_eigenpair_sym(H, tol: float = SYMMETRY_TOL) -> Tuple[float, NDArray[np.float64]]:
    """Smallest eigenvalue of a symmetric matrix and a unit eigenvector.

    The input is symmetrized as (H + H^T)/2 after checking that no entry of
    H - H^T exceeds ``tol`` in absolute value.

    Raises:
        DomainError: If H is not symmetric within ``tol``
        NumericalFailureError: If the returned pair misses
            ||H v - lambda v|| <= EIGEN_RESIDUAL_TOL * max(1, ||H||_F)
    """
    sym = _symmetrized(H, tol)
    values, vectors = scipy.linalg.eigh(sym, subset_by_index=[0, 0])
    lam = float(values[0])
    vector = vectors[:, 0] / np.linalg.norm(vectors[:, 0])
    residual = float(np.linalg.norm(sym @ vector - lam * vector))
    bound = EIGEN_RESIDUAL_TOL * max(1.0, float(np.linalg.norm(sym, "fro")))
    if not residual <= bound:
        raise NumericalFailureError(f"eigenpair residual {residual!r} exceeds {bound!r}")
    return lam, vector


def min_eigenvalue_sym(H, tol: float = SYMMETRY_TOL) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return min_eigenpair_sym(H, tol)[0]


def spectral_norm_sym(M, tol: float = SYMMETRY_TOL) -> float:
    """max_i |lambda_i(M)| for a symmetric matrix."""
    sym = _symmetrized(M, tol)
    values = scipy.linalg.eigvalsh(sym)
    return float(np.max(np.abs(values)))
