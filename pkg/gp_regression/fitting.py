"""
Type-II maximum likelihood for the SE-ARD hyperparameters.

The negative log marginal likelihood is minimized in log-standard-deviation
space with L-BFGS-B and an analytic gradient, from the initial guess plus
randomized restarts.
"""

from typing import Optional, Tuple
import logging

import numpy as np
from scipy.linalg import cho_solve
from scipy.optimize import minimize

from config.schemas import KernelBounds
from gp_regression.exceptions import (
    ContractViolationError,
    FittingFailedError,
    SingularKernelError,
)
from gp_regression.kernels import kernel_matrix
from gp_regression.models.gp import KernelParams
from gp_regression.regressor import stable_cholesky

logger = logging.getLogger(__name__)

# Objective value reported to the optimizer when the Gram matrix is singular.
_FAILED_NLL = 1e20


def negative_log_marginal_likelihood(
    params: KernelParams, X: np.ndarray, Y: np.ndarray
) -> Tuple[float, np.ndarray]:
    """
    Negative log marginal likelihood and its gradient.

    Args:
        params: Hyperparameters.
        X: Training inputs, shape (N, n).
        Y: Training targets, shape (N,).

    Returns:
        Tuple of (nll, gradient with respect to ``params.to_log_vector()``).
        nll is ``inf`` when the Gram matrix cannot be factorized.
    """
    X = np.asarray(X, dtype=float).reshape(-1, params.input_dim)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    N = X.shape[0]

    k_f = kernel_matrix(params, X, X)
    gram = k_f + params.noise_variance * np.eye(N)
    try:
        chol, _ = stable_cholesky(gram)
    except SingularKernelError:
        return float("inf"), np.zeros(params.input_dim + 2)

    alpha = cho_solve((chol, True), Y)
    nll = 0.5 * Y @ alpha + np.sum(np.log(np.diag(chol))) + 0.5 * N * np.log(2.0 * np.pi)

    weight = cho_solve((chol, True), np.eye(N)) - np.outer(alpha, alpha)
    grad = np.empty(params.input_dim + 2)
    grad[0] = 0.5 * np.sum(weight * (2.0 * k_f))
    ell = params.lengthscale_array
    for d in range(params.input_dim):
        sq_diff = (X[:, d][:, None] - X[:, d][None, :]) ** 2
        grad[1 + d] = 0.5 * np.sum(weight * k_f * sq_diff / ell[d] ** 2)
    grad[-1] = 0.5 * np.trace(weight) * 2.0 * params.noise_variance
    return float(nll), grad


def _log_bounds(bounds: KernelBounds, input_dim: int) -> list:
    return (
        [tuple(np.log(bounds.signal_std))]
        + [tuple(np.log(bounds.lengthscale))] * input_dim
        + [tuple(np.log(bounds.noise_std))]
    )


def _random_start(
    rng: np.random.Generator, X: np.ndarray, Y: np.ndarray, log_bounds: list
) -> np.ndarray:
    """Draw a start scaled to the data, clipped into the bounds."""
    y_std = max(float(np.std(Y)), 1e-3)
    x_std = np.maximum(np.std(X, axis=0), 1e-2)
    theta = np.concatenate(
        [
            [np.log(y_std) + rng.uniform(-1.0, 1.0)],
            np.log(x_std) + rng.uniform(-1.5, 1.5, size=X.shape[1]),
            [np.log(y_std) + rng.uniform(-5.0, -1.0)],
        ]
    )
    lower, upper = np.array(log_bounds).T
    return np.clip(theta, lower, upper)


def fit_hyperparameters(
    X: np.ndarray,
    Y: np.ndarray,
    init: KernelParams,
    restarts: int = 3,
    bounds: Optional[KernelBounds] = None,
    seed: int = 0,
) -> KernelParams:
    """
    Maximize the marginal likelihood over the kernel hyperparameters.

    Args:
        X: Training inputs, shape (N, n).
        Y: Training targets, shape (N,).
        init: Initial guess; always the first start.
        restarts: Number of randomized starts run after the one from ``init``.
        bounds: Box on sigma_f, lengthscales and sigma_n.
        seed: Seed for the randomized starts.

    Returns:
        Parameters whose negative log marginal likelihood is no larger than
        that of ``init``.

    Raises:
        ContractViolationError: If fewer than two data points are given.
        FittingFailedError: If every start gives a non-finite likelihood.
    """
    X = np.asarray(X, dtype=float).reshape(-1, init.input_dim)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if X.shape[0] < 2:
        raise ContractViolationError(
            f"Hyperparameter fitting needs at least 2 points, got {X.shape[0]}"
        )
    bounds = bounds or KernelBounds()
    log_bounds = _log_bounds(bounds, init.input_dim)
    lower, upper = np.array(log_bounds).T
    rng = np.random.default_rng(seed)

    def objective(theta: np.ndarray) -> Tuple[float, np.ndarray]:
        nll, grad = negative_log_marginal_likelihood(
            KernelParams.from_log_vector(theta), X, Y
        )
        if not np.isfinite(nll):
            return _FAILED_NLL, np.zeros_like(theta)
        return nll, grad

    init_nll, _ = negative_log_marginal_likelihood(init, X, Y)
    best_params, best_nll = init, init_nll

    starts = [np.clip(init.to_log_vector(), lower, upper)]
    starts += [_random_start(rng, X, Y, log_bounds) for _ in range(max(restarts, 0))]

    for i, theta0 in enumerate(starts):
        try:
            result = minimize(
                objective, theta0, jac=True, method="L-BFGS-B", bounds=log_bounds
            )
        except (ValueError, FloatingPointError) as e:
            logger.warning(f"Hyperparameter start {i} raised {e}")
            continue
        if not np.isfinite(result.fun) or result.fun >= _FAILED_NLL:
            logger.debug(f"Hyperparameter start {i} ended at a singular point")
            continue
        logger.debug(f"Hyperparameter start {i}: nll={result.fun:.4f}, iters={result.nit}")
        if result.fun < best_nll:
            best_params = KernelParams.from_log_vector(result.x)
            best_nll = float(result.fun)

    if not np.isfinite(best_nll):
        raise FittingFailedError(
            "Negative log likelihood was non-finite at every start",
            best_params=best_params,
            best_nll=best_nll,
        )

    logger.info(
        f"Fitted kernel on N={X.shape[0]}: sigma_f^2={best_params.signal_variance:.3g}, "
        f"sigma_n^2={best_params.noise_variance:.3g}, nll={best_nll:.3f}"
    )
    return best_params
