"""
Integration tests for all CLI commands.

These tests verify that:
1. Each command runs on small instances and writes its artifacts
2. Degenerate instances and bad options map onto the documented exit codes
3. Reports and metadata carry the values the run computed

Run with: uv run pytest tests/test_cli_integration.py -v
"""

import numpy as np
import pytest
from click.testing import CliRunner

from quadnet_landscape.cli import main
from quadnet_landscape.models import Dataset
from quadnet_landscape.storage import load_dataset, load_params, read_report, read_trace, save_dataset

# Practical PGD constants; the scheduled ell makes the phase length enormous
FAST_PGD = ["--ell", "10", "--rho", "10", "--pgd-eps", "1e-2"]


# =============================================================================
# Test Fixtures
# =============================================================================


@pytest.fixture
def runner():
    """Create a Click CLI test runner."""
    return CliRunner()


@pytest.fixture
def zero_label_file(tmp_path):
    """Four unit-norm samples in R^3 with y = 0."""
    rng = np.random.default_rng(5)
    X = rng.standard_normal((4, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    path = tmp_path / "zero.bin"
    save_dataset(path, Dataset(X, np.zeros(4)))
    return path


# =============================================================================
# gen
# =============================================================================


class TestGen:
    """Tests for the gen command."""

    def test_synthetic(self, runner, tmp_path):
        out = tmp_path / "synth"
        result = runner.invoke(main, ["gen", "--n", "2", "--d", "2", "--out", str(out)])
        assert result.exit_code == 0, result.output
        data = load_dataset(out / "dataset.bin")
        assert (data.n, data.d) == (2, 2)
        report = read_report(out / "report.txt")
        assert report["n"] == 2
        assert report["sigma_min_X"] > 0
        meta = read_report(out / "meta.txt")
        assert meta["subcommand"] == "gen"
        assert meta["seed.data"] == 1
        assert meta["derived.noise_order"] == "after-normalization"

    def test_noise_and_random_labels(self, runner, tmp_path):
        out = tmp_path / "noisy"
        result = runner.invoke(
            main, ["gen", "--n", "20", "--d", "3", "--noise-std", "0.1", "--random-labels", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        data = load_dataset(out / "dataset.bin")
        assert set(np.unique(data.y)) <= set(float(c) for c in range(10))
        assert not np.allclose(np.linalg.norm(data.X, axis=1), 1.0)

    def test_tensor_cap_skips_sigma(self, runner, tmp_path):
        out = tmp_path / "capped"
        result = runner.invoke(main, ["gen", "--n", "10", "--d", "5", "--tensor-cap", "10", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "sigma_min_X" not in read_report(out / "report.txt")

    def test_zero_samples_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["gen", "--n", "0", "--out", str(tmp_path)])
        assert result.exit_code == 1

    def test_idx_options_go_together(self, runner, tmp_path):
        images = tmp_path / "images"
        images.write_bytes(b"")
        result = runner.invoke(main, ["gen", "--idx-images", str(images), "--out", str(tmp_path)])
        assert result.exit_code == 1
        assert "go together" in result.output

    def test_example(self, runner):
        result = runner.invoke(main, ["gen", "--example"])
        assert result.exit_code == 0
        assert "quadnet gen" in result.output


# =============================================================================
# train2
# =============================================================================


class TestTrain2:
    """Tests for the train2 command."""

    def test_small_run_writes_artifacts(self, runner, tmp_path):
        out = tmp_path / "t2"
        args = ["train2", "--n", "4", "--d", "3", "--max-iters", "2000", "--out", str(out)] + FAST_PGD
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        for name in ("dataset.bin", "params.bin", "trace.csv", "report.txt", "meta.txt"):
            assert (out / name).exists()
        W, R = load_params(out / "params.bin")
        assert W.shape == (3, 8)
        assert R is None
        report = read_report(out / "report.txt")
        assert report["optimizer"] == "pgd"
        assert report["status"] in ("converged", "budget-exhausted")
        assert "landscape.lambda_min_hessian" in report
        assert "stationarity.is_eps_sosp" in report
        meta = read_report(out / "meta.txt")
        assert meta["option.n"] == 4
        assert meta["seed.optimizer"] == 4
        assert meta["derived.pgd.ell"] == 10.0
        assert len(read_trace(out / "trace.csv")) > 1

    def test_zero_labels_converge_at_origin(self, runner, tmp_path, zero_label_file):
        out = tmp_path / "zero"
        args = ["train2", "--data", str(zero_label_file), "--max-iters", "20000", "--record-every", "100", "--out", str(out)]
        result = runner.invoke(main, args + FAST_PGD)
        assert result.exit_code == 0, result.output
        report = read_report(out / "report.txt")
        assert report["status"] == "converged"
        assert report["final_loss"] == 0.0
        assert report["stuck"] is False

    def test_gd_is_stuck(self, runner, tmp_path):
        out = tmp_path / "gd"
        args = ["train2", "--n", "4", "--d", "3", "--optimizer", "gd", "--ell", "10", "--max-iters", "20", "--out", str(out)]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        assert "gd is stuck" in result.output
        assert read_report(out / "report.txt")["stuck"] is True

    def test_divergent_step_is_numerical_failure(self, runner, tmp_path):
        args = [
            "train2", "--n", "4", "--d", "3", "--optimizer", "gd", "--lr", "1e6",
            "--init-scale", "1", "--max-iters", "200", "--out", str(tmp_path / "blowup"),
        ]
        result = runner.invoke(main, args)
        assert result.exit_code == 3, result.output
        assert "non-finite" in result.output

    def test_gd_at_optimum_is_not_stuck(self, runner, tmp_path, zero_label_file):
        """y = 0: GD stays at W = 0, which is already optimal."""
        out = tmp_path / "gd0"
        args = ["train2", "--data", str(zero_label_file), "--optimizer", "gd", "--ell", "10", "--max-iters", "20", "--out", str(out)]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        assert "gd is stuck" not in result.output
        report = read_report(out / "report.txt")
        assert report["final_loss"] == 0.0
        assert report["stuck"] is False

    def test_gd_with_random_start(self, runner, tmp_path):
        out = tmp_path / "gd"
        args = ["train2", "--n", "4", "--d", "3", "--optimizer", "gd", "--ell", "20", "--max-iters", "50", "--init-scale", "0.1", "--out", str(out)]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        assert read_report(out / "report.txt")["stuck"] is False

    def test_adam_epochs(self, runner, tmp_path):
        out = tmp_path / "adam"
        args = [
            "train2", "--n", "6", "--d", "3", "--optimizer", "adam", "--batch-size", "4",
            "--epochs", "3", "--init-scale", "0.1", "--out", str(out),
        ]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        report = read_report(out / "report.txt")
        assert report["iterations"] == 6
        assert report["status"] == "completed"

    def test_trials(self, runner, tmp_path):
        out = tmp_path / "trials"
        args = ["train2", "--n", "4", "--d", "3", "--optimizer", "gd", "--ell", "10", "--max-iters", "5", "--trials", "2", "--out", str(out)]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        assert read_report(out / "trial-000" / "meta.txt")["seed.optimizer"] == 4
        assert read_report(out / "trial-001" / "meta.txt")["seed.optimizer"] == 5

    def test_degenerate_data(self, runner, tmp_path):
        """n > d^2 samples make X rank-deficient."""
        result = runner.invoke(main, ["train2", "--n", "5", "--d", "2", "--out", str(tmp_path)])
        assert result.exit_code == 2
        assert "rank-deficient" in result.output

    def test_narrow_width_needs_force(self, runner, tmp_path):
        result = runner.invoke(main, ["train2", "--n", "4", "--d", "3", "--r", "4", "--out", str(tmp_path)])
        assert result.exit_code == 1
        assert "--force" in result.output

    def test_odd_width(self, runner, tmp_path):
        result = runner.invoke(main, ["train2", "--n", "4", "--d", "3", "--r", "9", "--out", str(tmp_path)])
        assert result.exit_code == 1

    def test_invalid_eps(self, runner, tmp_path):
        result = runner.invoke(main, ["train2", "--eps", "0", "--out", str(tmp_path)])
        assert result.exit_code == 1

    def test_invalid_pgd_constants(self, runner, tmp_path):
        """ell below 1 is rejected by the library and reported as usage."""
        args = ["train2", "--n", "4", "--d", "3", "--ell", "0.5", "--out", str(tmp_path)]
        result = runner.invoke(main, args)
        assert result.exit_code == 1


# =============================================================================
# train3
# =============================================================================


class TestTrain3:
    """Tests for the train3 command."""

    def test_small_run(self, runner, tmp_path):
        out = tmp_path / "t3"
        args = ["train3", "--n", "4", "--d", "3", "--p", "2", "--k", "4", "--v", "0.01", "--max-iters", "500", "--out", str(out)]
        result = runner.invoke(main, args + FAST_PGD)
        assert result.exit_code == 0, result.output
        assert "Feature certificates" in result.output
        W, R = load_params(out / "params.bin")
        assert W.shape == (4, 10)
        assert R.shape == (4, 3)
        features = load_dataset(out / "features.bin")
        assert (features.n, features.d) == (4, 4)
        report = read_report(out / "report.txt")
        assert report["z.positive"] is True
        assert report["z.sigma_min"] > 0
        assert "feature_norm.bound" in report
        assert report["z.conditioning_ratio"] > 0
        meta = read_report(out / "meta.txt")
        assert meta["derived.r"] == 10
        assert meta["seed.features"] == 2

    def test_identity_features_match_train2(self, runner, tmp_path):
        common = ["--n", "4", "--d", "3", "--max-iters", "300"] + FAST_PGD
        two = runner.invoke(main, ["train2", "--out", str(tmp_path / "a")] + common)
        three = runner.invoke(main, ["train3", "--identity-features", "--v", "0", "--eps", "1e-4", "--out", str(tmp_path / "b")] + common)
        assert two.exit_code == 0, two.output
        assert three.exit_code == 0, three.output
        assert (tmp_path / "a" / "trace.csv").read_text() == (tmp_path / "b" / "trace.csv").read_text()

    def test_too_few_features(self, runner, tmp_path):
        """C(k+1, 2) <= n cannot certify Z."""
        result = runner.invoke(main, ["train3", "--n", "4", "--d", "3", "--k", "2", "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_negative_variance(self, runner, tmp_path):
        result = runner.invoke(main, ["train3", "--v", "-1", "--out", str(tmp_path)])
        assert result.exit_code == 1


# =============================================================================
# landscape
# =============================================================================


class TestLandscape:
    """Tests for the landscape command."""

    def test_zero_point(self, runner, tmp_path):
        data_path = tmp_path / "scalar.bin"
        save_dataset(data_path, Dataset(np.array([[1.0]]), np.array([2.0])))
        out = tmp_path / "report"
        result = runner.invoke(main, ["landscape", "--zero", "--data", str(data_path), "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = read_report(out / "report.txt")
        assert report["lambda_min_hessian"] == pytest.approx(-2.0)
        assert report["spectral_norm_M"] == pytest.approx(2.0)
        assert report["loss"] == 1.0

    def test_saved_params_with_stationarity(self, runner, tmp_path):
        out = tmp_path / "t2"
        train = runner.invoke(main, ["train2", "--n", "4", "--d", "3", "--max-iters", "300", "--out", str(out)] + FAST_PGD)
        assert train.exit_code == 0, train.output
        args = [
            "landscape", "--params", str(out / "params.bin"), "--data", str(out / "dataset.bin"),
            "--eps", "1e-2", "--rho", "10", "--out", str(tmp_path / "ls"),
        ]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        report = read_report(tmp_path / "ls" / "report.txt")
        assert report["width_ok"] is True
        assert "stationarity.grad_norm" in report

    def test_writes_meta(self, runner, tmp_path, zero_label_file):
        out = tmp_path / "ls"
        args = ["landscape", "--zero", "--r", "8", "--data", str(zero_label_file), "--out", str(out)]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        meta = read_report(out / "meta.txt")
        assert meta["subcommand"] == "landscape"
        assert meta["option.zero"] is True
        assert meta["option.r"] == 8
        assert read_report(out / "report.txt")["identity_holds"] is True

    def test_hessian_cap(self, runner, tmp_path, zero_label_file):
        args = ["landscape", "--zero", "--data", str(zero_label_file), "--hessian-cap", "10"]
        result = runner.invoke(main, args)
        assert result.exit_code == 1
        assert "cap" in result.output

    def test_needs_params_or_zero(self, runner, zero_label_file):
        result = runner.invoke(main, ["landscape", "--data", str(zero_label_file)])
        assert result.exit_code == 1


# =============================================================================
# spectra
# =============================================================================


class TestSpectra:
    """Tests for the spectra command."""

    def test_identity(self, runner, tmp_path):
        out = tmp_path / "eye"
        result = runner.invoke(main, ["spectra", "--identity", "4", "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = read_report(out / "report.txt")
        assert report["sigma_min"] == pytest.approx(1.0)
        assert report["leave_one_out"] == pytest.approx(1.0)
        assert report["holds"] is True

    def test_duplicate_samples(self, runner, tmp_path):
        data_path = tmp_path / "dup.bin"
        X = np.array([[0.6, 0.8], [0.6, 0.8], [1.0, 0.0]])
        save_dataset(data_path, Dataset(X, np.zeros(3)))
        out = tmp_path / "dup"
        result = runner.invoke(main, ["spectra", "--dataset", str(data_path), "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = read_report(out / "report.txt")
        assert report["sigma_min"] == pytest.approx(0.0, abs=1e-12)
        assert report["leave_one_out"] == pytest.approx(0.0, abs=1e-12)

    def test_random(self, runner, tmp_path):
        out = tmp_path / "gauss"
        result = runner.invoke(main, ["spectra", "--random", "30", "5", "--seed", "7", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert read_report(out / "report.txt")["holds"] is True
        meta = read_report(out / "meta.txt")
        assert meta["subcommand"] == "spectra"
        assert meta["seed.matrix"] == 7
        assert meta["option.tensor_cap"] > 0

    def test_identity_meta_has_no_seed(self, runner, tmp_path):
        out = tmp_path / "eye"
        result = runner.invoke(main, ["spectra", "--identity", "3", "--out", str(out)])
        assert result.exit_code == 0, result.output
        meta = read_report(out / "meta.txt")
        assert meta["option.identity"] == 3
        assert "seed.matrix" not in meta

    def test_wide_random_rejected(self, runner):
        result = runner.invoke(main, ["spectra", "--random", "2", "5"])
        assert result.exit_code == 1

    def test_exactly_one_source(self, runner):
        result = runner.invoke(main, ["spectra", "--identity", "2", "--random", "3", "2"])
        assert result.exit_code == 1
        result = runner.invoke(main, ["spectra"])
        assert result.exit_code == 1


class TestGroup:
    """Tests for the command group itself."""

    def test_help_lists_commands(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for command in ("gen", "train2", "train3", "landscape", "spectra"):
            assert command in result.output

    def test_unknown_command(self, runner):
        result = runner.invoke(main, ["frobnicate"])
        assert result.exit_code == 1
