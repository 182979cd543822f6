"""Test configuration and fixtures for quadnet-landscape."""

from typing import Optional

import numpy as np
import pytest

from quadnet_landscape.datasets import gen_synthetic
from quadnet_landscape.models import Dataset, TwoLayerParams


def random_instance(seed: int, d: int, n: int, r: Optional[int] = None, w_scale: float = 1.0):
    """Random normalized dataset with a random W of the given width (default 2d+2)."""
    rng = np.random.default_rng(seed)
    data = gen_synthetic(n, d, seed=seed)
    width = r if r is not None else 2 * d + 2
    W = w_scale * rng.standard_normal((d, width)) / np.sqrt(d * width)
    return data, TwoLayerParams(W)


@pytest.fixture
def tiny_data():
    """Three unit-norm samples in R^3 with nonzero labels."""
    return gen_synthetic(3, 3, seed=11)


@pytest.fixture
def scalar_data():
    """d = 1, n = 1, x = 1, y = 2: f(W) = (sum a_i w_i^2 - 2)^2 / 4."""
    return Dataset(np.array([[1.0]]), np.array([2.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
