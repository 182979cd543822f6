"""Utility functions for quadnet-landscape.

This module provides shared helpers used across the package:
- format_float(): Shortest round-trip decimal text for a float
- format_elapsed(): Human-readable wall-clock duration
- as_matrix() / as_vector(): Shape and finiteness validation
- check_cap(): Size-cap enforcement for dense objects
- make_rng() / uniform_ball(): Seeded randomness
"""

import math

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidArgumentError, ResourceLimitError


def format_float(value: float) -> str:
    """Format a float with the shortest text that parses back to it exactly.

    Example:
        >>> format_float(0.1)
        '0.1'
        >>> format_float(1e-12)
        '1e-12'
    """
    return repr(float(value))


def format_elapsed(seconds: float) -> str:
    """Format a duration in seconds as a human-readable string.

    Example:
        >>> format_elapsed(3.25)
        '3.2s'
        >>> format_elapsed(125)
        '2m 5s'
    """
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes = int(seconds // 60)
    secs = int(seconds % 60)
    if minutes < 60:
        return f"{minutes}m {secs}s"
    return f"{minutes // 60}h {minutes % 60}m"


def as_vector(values, name: str = "vector", allow_empty: bool = False) -> NDArray[np.float64]:
    """Return ``values`` as a finite 1-D float64 array.

    Raises:
        InvalidArgumentError: If the input is not 1-D, is empty, or has
            non-finite entries
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0 and not allow_empty:
        raise InvalidArgumentError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return arr


def as_matrix(values, name: str = "matrix", allow_empty: bool = False) -> NDArray[np.float64]:
    """Return ``values`` as a finite 2-D float64 array.

    Raises:
        InvalidArgumentError: If the input is not 2-D, is empty, or has
            non-finite entries
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0 and not allow_empty:
        raise InvalidArgumentError(f"{name} must be nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return arr


def check_cap(size: int, cap: int, what: str) -> None:
    """Refuse to build a dense object with more than ``cap`` units.

    Raises:
        ResourceLimitError: If size exceeds cap
    """
    if size > cap:
        raise ResourceLimitError(f"{what} needs {size} (cap {cap})")


def make_rng(seed: int) -> np.random.Generator:
    """Create the package's standard seeded generator."""
    return np.random.default_rng(seed)


def uniform_ball(rng: np.random.Generator, dim: int, radius: float) -> NDArray[np.float64]:
    """Draw a point uniformly from the ``dim``-dimensional ball of ``radius``.

    Direction is a normalized Gaussian; the radius is scaled by U^(1/dim),
    which gives the exact uniform law on the ball.
    """
    direction = rng.standard_normal(dim)
    norm = np.linalg.norm(direction)
    while norm == 0.0:
        direction = rng.standard_normal(dim)
        norm = np.linalg.norm(direction)
    scale = radius * rng.random() ** (1.0 / dim)
    return direction * (scale / norm)


def binomial(n: int, k: int) -> int:
    """Binomial coefficient, zero outside 0 <= k <= n."""
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)
