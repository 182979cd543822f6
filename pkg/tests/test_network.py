"""Tests for the two-layer network, its loss and derivatives."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import random_instance
from quadnet_landscape.errors import InvalidArgumentError, ResourceLimitError
from quadnet_landscape.models import Dataset, TwoLayerParams, sign_pattern
from quadnet_landscape.network import (
    RegularizedObjective,
    flatten_weights,
    forward,
    grad_f,
    grad_g,
    hessian_full,
    hessian_quadratic,
    loss_f,
    loss_g,
    residual_matrix,
    residuals,
    unflatten_weights,
)
from quadnet_landscape.spectra import min_eigenvalue_sym, tensor_power_rows


def numeric_gradient(params, data, step=1e-4):
    W = params.W
    grad = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        plus, minus = W.copy(), W.copy()
        plus[idx] += step
        minus[idx] -= step
        grad[idx] = (loss_f(TwoLayerParams(plus), data) - loss_f(TwoLayerParams(minus), data)) / (2 * step)
    return grad


class TestParams:
    """Tests for the parameter container."""

    def test_sign_pattern(self):
        assert_array_equal(sign_pattern(4), [1.0, 1.0, -1.0, -1.0])

    def test_odd_width_rejected(self):
        with pytest.raises(InvalidArgumentError):
            TwoLayerParams(np.zeros((2, 3)))

    def test_wrong_signs_rejected(self):
        with pytest.raises(InvalidArgumentError):
            TwoLayerParams(np.zeros((2, 2)), a=np.array([-1.0, 1.0]))

    def test_flatten_is_column_major(self):
        """Entry k*d + i of the vector is W[i, k]."""
        W = np.arange(6.0).reshape(2, 3)
        w = flatten_weights(W)
        assert w[1 * 2 + 0] == W[0, 1]
        assert_array_equal(unflatten_weights(w, 2, 3), W)


class TestForward:
    """Tests for forward and residuals."""

    def test_zero_weights(self):
        assert forward(TwoLayerParams.zeros(3, 4), [1.0, 2.0, 3.0]) == 0.0

    def test_hand_example(self):
        """d=1, r=4, W=(1,0,0,0), x=1 gives 1."""
        assert forward(TwoLayerParams(np.array([[1.0, 0.0, 0.0, 0.0]])), [1.0]) == 1.0

    def test_even_activation(self, rng):
        """Negating all weights leaves the output unchanged."""
        params = TwoLayerParams(rng.standard_normal((3, 4)))
        x = rng.standard_normal(3)
        assert forward(TwoLayerParams(-params.W), x) == pytest.approx(forward(params, x))

    def test_output_scaling(self, rng):
        """forward(cW, x) = c^2 forward(W, x)."""
        params = TwoLayerParams(rng.standard_normal((3, 4)))
        x = rng.standard_normal(3)
        assert forward(TwoLayerParams(2.5 * params.W), x) == pytest.approx(6.25 * forward(params, x))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            forward(TwoLayerParams.zeros(2, 2), [1.0])

    def test_residuals_at_zero(self, tiny_data):
        assert_array_equal(residuals(TwoLayerParams.zeros(3, 8), tiny_data), -tiny_data.y)


class TestLoss:
    """Tests for loss_f, residual_matrix and loss_g."""

    def test_scalar_example(self, scalar_data):
        """W=0, x=1, y=2: f = 1 and M = [-2]."""
        params = TwoLayerParams.zeros(1, 4)
        assert loss_f(params, scalar_data) == 1.0
        assert_array_equal(residual_matrix(params, scalar_data), [[-2.0]])

    def test_zero_labels(self):
        data = Dataset(np.eye(2), np.zeros(2))
        assert loss_f(TwoLayerParams.zeros(2, 2), data) == 0.0
        assert_array_equal(residual_matrix(TwoLayerParams.zeros(2, 2), data), np.zeros((2, 2)))

    def test_perfect_fit(self):
        """Labels generated by the network give zero loss."""
        params = TwoLayerParams(np.array([[1.0, 0.5], [0.0, 0.5]]))
        X = np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]])
        data = Dataset(X, np.array([forward(params, x) for x in X]))
        assert loss_f(params, data) == pytest.approx(0.0, abs=1e-15)

    def test_frobenius_identity(self, rng):
        """||M||_F = ||X delta|| / n with X = [x_j^(x)2]."""
        data, params = random_instance(3, d=4, n=6)
        X = tensor_power_rows(data.X, 2).T
        delta = residuals(params, data)
        lhs = np.linalg.norm(residual_matrix(params, data))
        assert lhs == pytest.approx(np.linalg.norm(X @ delta) / data.n, rel=1e-10)

    def test_residual_matrix_symmetric(self):
        data, params = random_instance(5, d=3, n=5)
        M = residual_matrix(params, data)
        assert_array_equal(M, M.T)

    def test_regularized(self, rng):
        data, params = random_instance(7, d=3, n=4)
        assert loss_g(params, data, 0.0) == loss_f(params, data)
        gamma = 0.3
        expected = loss_f(params, data) + 0.5 * gamma * np.sum(params.W**2)
        assert loss_g(params, data, gamma) == pytest.approx(expected)
        assert loss_g(TwoLayerParams.zeros(3, 8), data, gamma) == loss_f(TwoLayerParams.zeros(3, 8), data)

    def test_negative_gamma_rejected(self, tiny_data):
        with pytest.raises(InvalidArgumentError):
            loss_g(TwoLayerParams.zeros(3, 8), tiny_data, -1.0)


class TestDerivatives:
    """Tests for the gradient and Hessian against finite differences."""

    def test_origin_is_stationary(self, tiny_data):
        assert_array_equal(grad_f(TwoLayerParams.zeros(3, 8), tiny_data), np.zeros((3, 8)))

    def test_gradient_finite_differences(self):
        """Relative error of the gradient is at most 1e-6 on random instances."""
        for seed in range(50):
            d = 2 + seed % 3
            data, params = random_instance(seed, d=d, n=4)
            analytic = grad_f(params, data)
            numeric = numeric_gradient(params, data)
            scale = max(np.linalg.norm(analytic), 1e-8)
            assert np.linalg.norm(analytic - numeric) / scale <= 1e-6

    def test_hessian_finite_differences(self):
        """Columns of the Hessian match differences of the gradient."""
        step = 1e-4
        for seed in range(50):
            data, params = random_instance(100 + seed, d=2 + seed % 3, n=3)
            H = hessian_full(params, data)
            d, r = params.d, params.r
            w = flatten_weights(params.W)
            numeric = np.zeros_like(H)
            for i in range(w.size):
                plus, minus = w.copy(), w.copy()
                plus[i] += step
                minus[i] -= step
                gp = flatten_weights(grad_f(TwoLayerParams(unflatten_weights(plus, d, r)), data))
                gm = flatten_weights(grad_f(TwoLayerParams(unflatten_weights(minus, d, r)), data))
                numeric[:, i] = (gp - gm) / (2 * step)
            assert np.linalg.norm(H - numeric) / max(np.linalg.norm(H), 1e-8) <= 1e-5

    def test_quadratic_form_matches_assembly(self, rng):
        """hessian_quadratic(Z) = z^T H z with z flattened column-major."""
        for seed in range(50):
            data, params = random_instance(200 + seed, d=3, n=5)
            Z = rng.standard_normal(params.W.shape)
            z = flatten_weights(Z)
            for gamma in (0.0, 0.25):
                full = float(z @ hessian_full(params, data, gamma=gamma) @ z)
                assert hessian_quadratic(params, data, Z, gamma) == pytest.approx(full, rel=1e-8, abs=1e-12)

    def test_quadratic_form_zero_direction(self, tiny_data, rng):
        params = TwoLayerParams(rng.standard_normal((3, 8)))
        assert hessian_quadratic(params, tiny_data, np.zeros((3, 8))) == 0.0

    def test_hessian_scalar_example(self, scalar_data):
        """d=1, r=4, W=0, x=1, y=2 gives diag(-2, -2, 2, 2)."""
        assert_allclose(hessian_full(TwoLayerParams.zeros(1, 4), scalar_data), np.diag([-2.0, -2.0, 2.0, 2.0]))

    def test_hessian_at_origin_is_block_diagonal(self, tiny_data):
        params = TwoLayerParams.zeros(3, 4)
        H = hessian_full(params, tiny_data)
        M = -(tiny_data.X.T * tiny_data.y) @ tiny_data.X / tiny_data.n
        for k, a in enumerate(params.a):
            block = slice(3 * k, 3 * k + 3)
            assert_allclose(H[block, block], a * M, atol=1e-12)
        assert_allclose(H[0:3, 3:6], np.zeros((3, 3)), atol=1e-12)

    def test_regularization_shifts_spectrum(self):
        data, params = random_instance(9, d=3, n=4)
        gamma = 0.7
        shifted = min_eigenvalue_sym(hessian_full(params, data, gamma=gamma))
        assert shifted == pytest.approx(min_eigenvalue_sym(hessian_full(params, data)) + gamma, abs=1e-10)

    def test_hessian_cap(self, tiny_data):
        with pytest.raises(ResourceLimitError):
            hessian_full(TwoLayerParams.zeros(3, 8), tiny_data, cap=10)

    def test_grad_g(self):
        data, params = random_instance(4, d=2, n=3)
        assert_allclose(grad_g(params, data, 0.5), grad_f(params, data) + 0.5 * params.W)


class TestRegularizedObjective:
    """Tests for the flattened objective used by the optimizers."""

    def test_matches_matrix_form(self):
        data, params = random_instance(12, d=3, n=5)
        objective = RegularizedObjective(data, params.r, gamma=0.1)
        w = flatten_weights(params.W)
        assert objective.dim == 24
        assert objective.value(w) == pytest.approx(loss_g(params, data, 0.1))
        assert objective.loss(w) == pytest.approx(loss_f(params, data))
        assert_allclose(objective.gradient(w), flatten_weights(grad_g(params, data, 0.1)))

    def test_batch_gradient(self):
        """The gradient over all row indices equals the full gradient."""
        data, params = random_instance(13, d=2, n=6)
        objective = RegularizedObjective(data, params.r)
        w = flatten_weights(params.W)
        assert_allclose(objective.gradient(w, np.arange(6)), objective.gradient(w))
