"""Tests for GP regression: kernels, prediction, gradients and fitting."""

from unittest.mock import patch

import numpy as np
import pytest
from scipy.optimize import minimize

from gp_regression import (
    ContractViolationError,
    KernelParams,
    build_model,
    fit_hyperparameters,
    kernel_eval,
    kernel_input_jacobian,
    kernel_matrix,
    load_model,
    mean_gradient,
    negative_log_marginal_likelihood,
    predict,
    predict_mean,
    prior_model,
    save_model,
    stable_cholesky,
)


class TestKernelParams:
    """Test suite for kernel hyperparameters."""

    def test_rejects_non_positive_values(self):
        """Test zero or negative hyperparameters are rejected."""
        with pytest.raises(ContractViolationError):
            KernelParams(signal_variance=0.0, lengthscales=(1.0,), noise_variance=1e-3)
        with pytest.raises(ContractViolationError):
            KernelParams(signal_variance=1.0, lengthscales=(1.0, -2.0), noise_variance=1e-3)

    def test_log_vector_inverse(self, kernel_2d):
        """Test from_log_vector inverts to_log_vector."""
        restored = KernelParams.from_log_vector(kernel_2d.to_log_vector())
        assert restored.signal_variance == pytest.approx(kernel_2d.signal_variance)
        assert restored.lengthscales == pytest.approx(kernel_2d.lengthscales)
        assert restored.noise_variance == pytest.approx(kernel_2d.noise_variance)


class TestKernels:
    """Test suite for the SE-ARD kernel."""

    def test_kernel_eval_at_same_point(self, kernel_2d):
        """Test k(x, x) equals the signal variance."""
        assert kernel_eval(kernel_2d, [0.3, -1.0], [0.3, -1.0]) == pytest.approx(1.3)

    def test_kernel_eval_formula(self, kernel_2d):
        """Test kernel value against the closed form."""
        x, x2 = np.array([0.0, 1.0]), np.array([0.8, -0.4])
        expected = 1.3 * np.exp(-0.5 * ((0.8 / 0.8) ** 2 + (1.4 / 1.4) ** 2))
        assert kernel_eval(kernel_2d, x, x2) == pytest.approx(expected, rel=1e-12)

    def test_kernel_eval_dimension_mismatch(self, kernel_2d):
        """Test inputs with the wrong length are rejected."""
        with pytest.raises(ContractViolationError):
            kernel_eval(kernel_2d, [0.0, 1.0, 2.0], [0.0, 1.0])

    def test_kernel_matrix_matches_pointwise(self, rng, kernel_2d):
        """Test the Gram matrix agrees with kernel_eval entrywise."""
        A = rng.normal(size=(4, 2))
        B = rng.normal(size=(3, 2))
        K = kernel_matrix(kernel_2d, A, B)
        assert K.shape == (4, 3)
        for i in range(4):
            for j in range(3):
                assert K[i, j] == pytest.approx(kernel_eval(kernel_2d, A[i], B[j]), rel=1e-12)

    def test_kernel_matrix_empty(self, kernel_2d):
        """Test an empty input set gives an empty matrix."""
        assert kernel_matrix(kernel_2d, np.zeros((0, 2)), np.ones((3, 2))).shape == (0, 3)

    def test_kernel_input_jacobian(self, rng, kernel_2d, finite_difference, rel_error):
        """Test the kernel input Jacobian against finite differences."""
        X = rng.normal(size=(6, 2))
        x = np.array([0.2, -0.3])
        fd = finite_difference(lambda z: kernel_matrix(kernel_2d, z.reshape(1, -1), X)[0], x)
        analytic = kernel_input_jacobian(kernel_2d, x, X)
        assert analytic.shape == (2, 6)
        assert rel_error(analytic, fd) <= 1e-6


class TestStableCholesky:
    """Test suite for jittered Cholesky factorization."""

    def test_plain_factorization_without_jitter(self):
        """Test a well-conditioned matrix needs no jitter."""
        matrix = np.array([[2.0, 0.5], [0.5, 1.0]])
        chol, jitter = stable_cholesky(matrix)
        assert jitter == 0.0
        np.testing.assert_allclose(chol @ chol.T, matrix, atol=1e-12)

    def test_singular_matrix_escalates_jitter(self):
        """Test a rank-one matrix is factorized with positive jitter."""
        matrix = np.ones((3, 3))
        chol, jitter = stable_cholesky(matrix)
        assert jitter > 0.0
        np.testing.assert_allclose(chol @ chol.T, matrix + jitter * np.eye(3), atol=1e-9)

    def test_empty_matrix(self):
        """Test a 0x0 matrix factorizes trivially."""
        chol, jitter = stable_cholesky(np.zeros((0, 0)))
        assert chol.shape == (0, 0)


class TestPrediction:
    """Test suite for GP prediction."""

    def test_matches_dense_oracle(self, gp_2d, rng):
        """Test mean and covariance agree with explicit matrix inversion."""
        Xs = rng.uniform(-2.0, 2.0, size=(5, 2))
        kernel = gp_2d.kernel
        K = kernel_matrix(kernel, gp_2d.inputs, gp_2d.inputs) + kernel.noise_variance * np.eye(gp_2d.num_points)
        Ks = kernel_matrix(kernel, Xs, gp_2d.inputs)
        Kss = kernel_matrix(kernel, Xs, Xs)
        K_inv = np.linalg.inv(K)

        prediction = predict(gp_2d, Xs)
        np.testing.assert_allclose(prediction.mean, Ks @ K_inv @ gp_2d.targets, atol=1e-9)
        np.testing.assert_allclose(prediction.covariance, Kss - Ks @ K_inv @ Ks.T, atol=1e-9)

    def test_covariance_symmetric_psd(self, gp_2d, rng):
        """Test the posterior covariance is symmetric positive semidefinite."""
        cov = predict(gp_2d, rng.uniform(-2.0, 2.0, size=(6, 2))).covariance
        np.testing.assert_array_equal(cov, cov.T)
        assert np.min(np.linalg.eigvalsh(cov)) > -1e-10

    def test_interpolates_at_noise_floor(self):
        """Test near-noiseless GP reproduces its training targets."""
        kernel = KernelParams(signal_variance=1.0, lengthscales=(0.5, 0.5), noise_variance=1e-8)
        X = np.array([[-3.0, -3.0], [-1.5, 0.0], [0.0, 3.0], [1.5, -1.5], [3.0, 1.5], [0.0, 0.0]])
        Y = np.sin(X[:, 0]) + X[:, 1]
        model = build_model(X, Y, kernel)
        np.testing.assert_allclose(predict_mean(model, X), Y, atol=1e-5)

    def test_prior_model(self, kernel_2d):
        """Test a model without data predicts the prior."""
        model = prior_model(kernel_2d)
        Xs = np.array([[0.0, 0.0], [1.0, 0.5]])
        prediction = predict(model, Xs)
        assert model.is_prior
        np.testing.assert_array_equal(prediction.mean, np.zeros(2))
        np.testing.assert_allclose(prediction.covariance, kernel_matrix(kernel_2d, Xs, Xs))
        np.testing.assert_array_equal(mean_gradient(model, Xs[0]), np.zeros(2))

    def test_invariant_to_training_order(self, gp_2d, rng):
        """Test shuffling the training points leaves mean and covariance unchanged."""
        order = rng.permutation(gp_2d.num_points)
        shuffled = build_model(gp_2d.inputs[order], gp_2d.targets[order], gp_2d.kernel)
        Xstar = rng.uniform(-2.0, 2.0, size=(4, 2))
        original, permuted = predict(gp_2d, Xstar), predict(shuffled, Xstar)
        np.testing.assert_allclose(permuted.mean, original.mean, atol=1e-9)
        np.testing.assert_allclose(permuted.covariance, original.covariance, atol=1e-9)

    def test_mean_only_matches_joint(self, gp_2d, rng):
        """Test predict_mean agrees with predict."""
        Xs = rng.uniform(-2.0, 2.0, size=(4, 2))
        np.testing.assert_allclose(predict_mean(gp_2d, Xs), predict(gp_2d, Xs).mean, atol=1e-12)

    def test_query_dimension_mismatch(self, gp_2d):
        """Test queries with the wrong input dimension are rejected."""
        with pytest.raises(ContractViolationError):
            predict(gp_2d, np.zeros((2, 3)))

    def test_training_data_mismatch(self, kernel_2d):
        """Test mismatched inputs and targets are rejected."""
        with pytest.raises(ContractViolationError):
            build_model(np.zeros((3, 2)), np.zeros(4), kernel_2d)

    def test_non_finite_training_data(self, kernel_2d):
        """Test NaN training data is rejected."""
        with pytest.raises(ContractViolationError):
            build_model(np.array([[0.0, np.nan]]), np.zeros(1), kernel_2d)

    def test_mean_gradient(self, gp_2d, finite_difference, rel_error):
        """Test the mean gradient against finite differences."""
        x = np.array([0.4, -0.7])
        fd = finite_difference(lambda z: predict_mean(gp_2d, z)[0], x)
        assert rel_error(mean_gradient(gp_2d, x), fd) <= 1e-6

    def test_with_observation(self, gp_2d):
        """Test appending an observation grows the dataset and keeps the kernel."""
        grown = gp_2d.with_observation(np.array([0.1, 0.2]), 0.5)
        assert grown.num_points == gp_2d.num_points + 1
        assert grown.kernel == gp_2d.kernel
        assert gp_2d.num_points == 15


class TestModelFiles:
    """Test suite for saving and loading models."""

    def test_save_and_load(self, gp_2d, tmp_path):
        """Test a reloaded model predicts identically."""
        path = save_model(gp_2d, tmp_path / "model.gp")
        restored = load_model(path)
        Xs = np.array([[0.0, 0.0], [1.0, -1.0]])
        np.testing.assert_array_equal(predict_mean(restored, Xs), predict_mean(gp_2d, Xs))
        assert restored.jitter == gp_2d.jitter

    def test_missing_file(self, tmp_path):
        """Test loading a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_model(tmp_path / "missing.gp")


class TestFitting:
    """Test suite for hyperparameter fitting."""

    def test_nll_gradient(self, gp_2d, kernel_2d, finite_difference, rel_error):
        """Test the analytic likelihood gradient against finite differences."""
        X, Y = gp_2d.inputs, gp_2d.targets
        theta = kernel_2d.to_log_vector()
        _, grad = negative_log_marginal_likelihood(kernel_2d, X, Y)
        fd = finite_difference(
            lambda t: negative_log_marginal_likelihood(KernelParams.from_log_vector(t), X, Y)[0], theta
        )
        assert rel_error(grad, fd) <= 1e-5

    def test_fit_does_not_worsen_likelihood(self, gp_2d, kernel_2d, kernel_bounds):
        """Test the fitted parameters are at least as likely as the initial guess."""
        X, Y = gp_2d.inputs, gp_2d.targets
        fitted = fit_hyperparameters(X, Y, kernel_2d, restarts=2, bounds=kernel_bounds, seed=3)
        nll_init, _ = negative_log_marginal_likelihood(kernel_2d, X, Y)
        nll_fit, _ = negative_log_marginal_likelihood(fitted, X, Y)
        assert nll_fit <= nll_init + 1e-9

    def test_fit_is_deterministic(self, gp_2d, kernel_2d):
        """Test equal seeds give equal hyperparameters."""
        X, Y = gp_2d.inputs, gp_2d.targets
        first = fit_hyperparameters(X, Y, kernel_2d, restarts=3, seed=7)
        second = fit_hyperparameters(X, Y, kernel_2d, restarts=3, seed=7)
        assert first == second

    def test_fit_needs_two_points(self, kernel_2d):
        """Test fitting a single point is rejected."""
        with pytest.raises(ContractViolationError):
            fit_hyperparameters(np.zeros((1, 2)), np.zeros(1), kernel_2d)

    def test_fit_counts_randomized_restarts(self, gp_2d, kernel_2d):
        """Test the optimizer runs once from the initial guess plus once per restart."""
        X, Y = gp_2d.inputs, gp_2d.targets
        with patch("gp_regression.fitting.minimize", wraps=minimize) as optimizer:
            fit_hyperparameters(X, Y, kernel_2d, restarts=2, seed=1)
        assert optimizer.call_count == 3
        with patch("gp_regression.fitting.minimize", wraps=minimize) as optimizer:
            fit_hyperparameters(X, Y, kernel_2d, restarts=0)
        assert optimizer.call_count == 1

    def test_recovers_noise_level(self):
        """Test the fitted noise std is within a factor 2 of the generator's in most seeds."""
        truth = KernelParams(signal_variance=1.0, lengthscales=(0.5,), noise_variance=0.01)
        init = KernelParams(signal_variance=0.5, lengthscales=(1.0,), noise_variance=0.05)
        recovered = 0
        for seed in range(10):
            sample_rng = np.random.default_rng(seed)
            X = sample_rng.uniform(0.0, 10.0, size=(200, 1))
            gram = kernel_matrix(truth, X, X) + 1e-6 * np.eye(200)
            f = np.linalg.cholesky(gram) @ sample_rng.normal(size=200)
            Y = f + 0.1 * sample_rng.normal(size=200)
            fitted = fit_hyperparameters(X, Y, init, restarts=1, seed=seed)
            if 0.05 <= np.sqrt(fitted.noise_variance) <= 0.2:
                recovered += 1
        assert recovered >= 8

    def test_flat_targets_give_small_signal_variance(self, rng, kernel_2d):
        """Test targets fixed at zero up to tiny noise leave almost no signal variance."""
        X = rng.uniform(-2.0, 2.0, size=(40, 2))
        Y = 1e-3 * rng.normal(size=40)
        fitted = fit_hyperparameters(X, Y, kernel_2d, restarts=1, seed=0)
        assert fitted.signal_variance < 10.0 * np.var(Y)
