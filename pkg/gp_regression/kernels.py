"""
Squared-exponential ARD covariance function and its input derivatives.

k(x, x') = sigma_f^2 * exp(-0.5 * sum_d (x_d - x'_d)^2 / l_d^2)
"""

import numpy as np
from scipy.spatial.distance import cdist

from gp_regression.exceptions import ContractViolationError
from gp_regression.models.gp import KernelParams


def _as_rows(points: np.ndarray, params: KernelParams, name: str) -> np.ndarray:
    """Coerce to shape (M, n) and check the input dimension."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(1, -1)
    if points.ndim != 2 or points.shape[1] != params.input_dim:
        raise ContractViolationError(
            f"{name} has shape {points.shape}, expected (*, {params.input_dim})"
        )
    return points


def kernel_eval(params: KernelParams, x: np.ndarray, x2: np.ndarray) -> float:
    """
    Evaluate the covariance between two single inputs.

    Args:
        params: Kernel hyperparameters.
        x: First input, shape (n,).
        x2: Second input, shape (n,).

    Returns:
        k(x, x2).

    Raises:
        ContractViolationError: If either input does not have n entries.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    x2 = np.asarray(x2, dtype=float).reshape(-1)
    if x.shape != (params.input_dim,) or x2.shape != (params.input_dim,):
        raise ContractViolationError(
            f"Kernel inputs must have {params.input_dim} entries, "
            f"got {x.shape[0]} and {x2.shape[0]}"
        )
    scaled = (x - x2) / params.lengthscale_array
    return float(params.signal_variance * np.exp(-0.5 * np.dot(scaled, scaled)))


def kernel_matrix(params: KernelParams, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    Gram matrix between two row-per-sample input sets.

    Args:
        params: Kernel hyperparameters.
        A: Inputs, shape (M, n).
        B: Inputs, shape (N, n).

    Returns:
        Matrix of shape (M, N) with entries k(A_i, B_j).
    """
    A = _as_rows(A, params, "A")
    B = _as_rows(B, params, "B")
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((A.shape[0], B.shape[0]))
    ell = params.lengthscale_array
    sq_dist = cdist(A / ell, B / ell, metric="sqeuclidean")
    return params.signal_variance * np.exp(-0.5 * sq_dist)


def kernel_input_jacobian(
    params: KernelParams, xstar: np.ndarray, X: np.ndarray
) -> np.ndarray:
    """
    Gradient of k(x*, x^(j)) with respect to x* for every training input.

    Args:
        params: Kernel hyperparameters.
        xstar: Query input, shape (n,).
        X: Training inputs, shape (N, n).

    Returns:
        Matrix of shape (n, N); column j is d k(x*, x^(j)) / d x*.
    """
    xstar = _as_rows(xstar, params, "xstar")
    X = _as_rows(X, params, "X")
    k_row = kernel_matrix(params, xstar, X)[0]
    diff = xstar[0][:, None] - X.T
    return -(diff / params.lengthscale_array[:, None] ** 2) * k_row[None, :]
