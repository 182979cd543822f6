"""Tests for the frozen random feature layer and three-layer training."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from quadnet_landscape.datasets import gen_synthetic
from quadnet_landscape.diagnostics import check_descent
from quadnet_landscape.errors import (
    DegenerateInstanceError,
    InvalidArgumentError,
    PreconditionError,
    ResourceLimitError,
)
from quadnet_landscape.features import (
    build_q_matrix,
    conditioning_ratio,
    default_width,
    feature_map,
    feature_matrix,
    feature_norm_bound,
    identity_layer,
    make_layer,
    smooth_inputs,
    train_three_layer,
    x_bar_power_matrix,
    z_singular_certificate,
    z_tensor_matrix,
    z_theory_bound,
)
from quadnet_landscape.models import Dataset, RandomFeatureLayer
from quadnet_landscape.optim import train_two_layer
from quadnet_landscape.spectra import kron


class TestLayer:
    """Tests for building the layer and computing features."""

    def test_default_width(self):
        assert default_width(1) == 2
        assert default_width(40) == 14
        assert default_width(49) == 14

    def test_make_layer_is_seeded(self):
        first = make_layer(4, 6, 2, seed=3)
        assert first.R.shape == (6, 4)
        assert_array_equal(first.R, make_layer(4, 6, 2, seed=3).R)
        assert not np.array_equal(first.R, make_layer(4, 6, 2, seed=4).R)

    def test_scale(self):
        assert_allclose(make_layer(3, 2, 1, seed=1, scale=0.5).R, 0.5 * make_layer(3, 2, 1, seed=1).R)

    def test_invalid_layer(self):
        with pytest.raises(InvalidArgumentError):
            make_layer(3, 0, 2)
        with pytest.raises(InvalidArgumentError):
            make_layer(3, 2, 2, scale=0.0)
        with pytest.raises(InvalidArgumentError):
            RandomFeatureLayer(R=np.eye(2), p=0)

    def test_feature_map_hand_example(self):
        """R = [[1, 1], [1, -1]], p = 2, x = (1, 2) gives (9, 1)."""
        layer = RandomFeatureLayer(R=np.array([[1.0, 1.0], [1.0, -1.0]]), p=2)
        assert_array_equal(feature_map(layer, [1.0, 2.0]), [9.0, 1.0])

    def test_identity_layer(self, tiny_data):
        assert_array_equal(feature_matrix(identity_layer(3), tiny_data.X), tiny_data.X)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            feature_map(identity_layer(3), [1.0, 2.0])


class TestSmoothing:
    """Tests for the Gaussian input perturbation."""

    def test_zero_variance_is_copy(self, tiny_data):
        smoothed = smooth_inputs(tiny_data, 0.0)
        assert_array_equal(smoothed.X_bar, tiny_data.X)
        assert smoothed.X_bar is not tiny_data.X

    def test_noise_statistics(self):
        data = gen_synthetic(400, 5, seed=2)
        smoothed = smooth_inputs(data, 0.04, seed=7)
        noise = smoothed.X_bar - data.X
        assert abs(noise.mean()) < 0.02
        assert noise.var() == pytest.approx(0.04, rel=0.15)

    def test_seeded(self, tiny_data):
        first = smooth_inputs(tiny_data, 0.1, seed=1)
        assert_array_equal(first.X_bar, smooth_inputs(tiny_data, 0.1, seed=1).X_bar)
        assert not np.array_equal(first.X_bar, smooth_inputs(tiny_data, 0.1, seed=2).X_bar)

    def test_labels_kept(self, tiny_data):
        smoothed = smooth_inputs(tiny_data, 0.1)
        assert_array_equal(smoothed.dataset.y, tiny_data.y)

    def test_negative_variance(self, tiny_data):
        with pytest.raises(InvalidArgumentError):
            smooth_inputs(tiny_data, -0.1)


class TestTensorMatrices:
    """Tests for Z, Q and the input tensor powers."""

    def test_kronecker_identity(self, rng):
        """Z = (Q (x) Q) X_bar^(x)2p."""
        layer = RandomFeatureLayer(R=rng.standard_normal((3, 2)), p=2)
        smoothed = smooth_inputs(Dataset(rng.standard_normal((2, 2)), np.zeros(2)), 0.0)
        Q = build_q_matrix(layer)
        expected = kron(Q, Q) @ x_bar_power_matrix(smoothed, 4)
        assert_allclose(z_tensor_matrix(layer, smoothed), expected, rtol=1e-10, atol=1e-12)

    def test_single_column(self):
        """n = 1 with z = (1, 2) gives the column (1, 2, 2, 4)."""
        layer = RandomFeatureLayer(R=np.array([[1.0], [2.0]]), p=1)
        smoothed = smooth_inputs(Dataset(np.array([[1.0]]), np.array([0.0])), 0.0)
        assert_array_equal(z_tensor_matrix(layer, smoothed), [[1.0], [2.0], [2.0], [4.0]])

    def test_cap(self, tiny_data):
        layer = make_layer(3, 10, 2)
        with pytest.raises(ResourceLimitError):
            z_tensor_matrix(layer, smooth_inputs(tiny_data, 0.0), cap=100)


class TestCertificate:
    """Tests for sigma_min(Z) and the closed-form bounds."""

    def test_positive_on_smoothed_data(self):
        data = gen_synthetic(6, 4, seed=3)
        cert = z_singular_certificate(make_layer(4, 6, 2, seed=2), smooth_inputs(data, 0.01, seed=3))
        assert cert.positive
        assert cert.sigma_min > 0
        assert (cert.n, cert.k, cert.p) == (6, 6, 2)

    def test_duplicate_samples(self):
        """Two equal inputs without smoothing give sigma_min(Z) = 0."""
        X = np.array([[0.6, 0.8], [0.6, 0.8]])
        smoothed = smooth_inputs(Dataset(X, np.array([0.1, 0.2])), 0.0)
        cert = z_singular_certificate(make_layer(2, 2, 2, seed=1), smoothed)
        assert cert.sigma_min == 0.0
        assert not cert.positive

    def test_too_few_features(self, tiny_data):
        """C(k+1, 2) <= n is refused."""
        with pytest.raises(PreconditionError):
            z_singular_certificate(make_layer(3, 2, 2), smooth_inputs(tiny_data, 0.01))

    def test_theory_bound_monotone_in_v(self):
        values = [z_theory_bound(10, 2, 2, 2, v, 0.1) for v in (0.01, 0.1, 1.0)]
        assert 0 < values[0] < values[1] < values[2]

    def test_theory_bound_vacuous(self):
        """A nonpositive bracket or v = 0 gives 0."""
        assert z_theory_bound(10, 2, 2, 2, 0.0, 0.1) == 0.0
        assert z_theory_bound(10, 2, 3, 2, 0.1, 0.1) == 0.0
        assert z_theory_bound(2, 5, 2, 2, 0.1, 0.1) == 0.0

    def test_theory_bound_large_degree_is_finite(self):
        value = z_theory_bound(40, 3, 2, 4, 0.5, 0.1)
        assert math.isfinite(value) and value > 0

    def test_feature_norm_bound_holds(self):
        data = gen_synthetic(20, 5, seed=6)
        report = feature_norm_bound(make_layer(5, 10, 2, seed=6), smooth_inputs(data, 0.01, seed=6))
        assert not report.violated
        assert report.max_norm <= report.bound

    def test_feature_norm_bound_grows_with_inputs(self):
        data = gen_synthetic(5, 3, seed=1)
        layer = make_layer(3, 4, 2, seed=1)
        small = feature_norm_bound(layer, smooth_inputs(data, 0.01))
        large = feature_norm_bound(layer, smooth_inputs(Dataset(2.0 * data.X, data.y), 0.01))
        noisier = feature_norm_bound(layer, smooth_inputs(data, 0.1))
        assert large.bound > small.bound
        assert noisier.bound > small.bound

    def test_conditioning_ratio(self):
        data = gen_synthetic(3, 3, seed=4)
        layer = make_layer(3, 4, 1, seed=4)
        smoothed = smooth_inputs(data, 0.01, seed=4)
        ratio = conditioning_ratio(layer, smoothed)
        sigma_z = z_singular_certificate(layer, smoothed).sigma_min
        assert ratio > 0
        assert ratio * np.linalg.svd(x_bar_power_matrix(smoothed, 2), compute_uv=False).min() == pytest.approx(sigma_z, rel=1e-8)


class TestTrainThreeLayer:
    """Tests for the three-layer pipeline."""

    def test_identity_layer_matches_two_layer(self):
        """Identity features with v = 0 reproduce the two-layer run exactly."""
        data = gen_synthetic(4, 3, seed=9)
        settings = dict(ell=10.0, rho=10.0, pgd_eps=1e-2, max_iters=3000)
        three = train_three_layer(data, p=1, k=None, eps_target=1e-4, v=0.0, layer=identity_layer(3), **settings)
        two = train_two_layer(data, 8, 1e-4, **settings)
        assert three.train.params.r == 8
        assert_array_equal(three.train.params.W, two.params.W)
        assert [r.objective for r in three.train.trace] == [r.objective for r in two.trace]

    def test_zero_labels(self):
        base = gen_synthetic(4, 3, seed=5)
        data = Dataset(base.X, np.zeros(4))
        result = train_three_layer(
            data, p=2, k=4, eps_target=1e-3, v=0.01, ell=10.0, rho=10.0, pgd_eps=1e-2, max_iters=20_000, record_every=100
        )
        assert result.train.result.status == "converged"
        assert result.final_loss == 0.0
        assert result.certificate.positive
        assert result.feature_data.d == 4
        assert result.train.params.r == 10

    def test_standard_normal_layer_trains(self):
        """With R ~ N(0, 1) the feature norms exceed 1 and the practical constants follow them."""
        data = gen_synthetic(6, 3, seed=2)
        result = train_three_layer(
            data, p=2, k=4, eps_target=1e-3, v=0.01, ell=20.0, rho=20.0, pgd_eps=1e-2, max_iters=20_000, record_every=100
        )
        features = result.feature_data
        assert features.B > 1.0
        assert result.train.hyper.ell == pytest.approx(20.0 * features.B**2)
        assert result.train.result.ball_exits == 0
        assert result.final_loss < result.train.theorem.f0
        assert check_descent(result.train.trace) == []

    def test_degenerate_features(self):
        X = np.array([[0.6, 0.8], [0.6, 0.8]])
        with pytest.raises(DegenerateInstanceError, match="smoothing variance"):
            train_three_layer(Dataset(X, np.array([0.1, 0.2])), p=2, k=2, eps_target=1e-3, v=0.0)

    def test_k_below_threshold(self, tiny_data):
        with pytest.raises(PreconditionError):
            train_three_layer(tiny_data, p=2, k=2, eps_target=1e-3, v=0.01)

    def test_layer_dimension_checked(self, tiny_data):
        with pytest.raises(InvalidArgumentError):
            train_three_layer(tiny_data, p=1, k=None, eps_target=1e-3, v=0.0, layer=identity_layer(2))
