"""
Exact GP regression: model construction, joint prediction and the
analytic input-gradient of the predictive mean.

Implements
    mu*    = K*  (K + sigma_n^2 I)^-1 Y
    Sigma* = K** - K* (K + sigma_n^2 I)^-1 K*^T
with a single cached Cholesky factor shared by all queries.
"""

from pathlib import Path
from typing import Optional, Tuple, Union
import json
import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from gp_regression.exceptions import ContractViolationError, SingularKernelError
from gp_regression.kernels import kernel_input_jacobian, kernel_matrix
from gp_regression.models.gp import GpModel, GpPrediction, KernelParams

logger = logging.getLogger(__name__)

# Diagonal jitter ladder tried after a plain factorization fails.
JITTER_LADDER = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


def stable_cholesky(
    matrix: np.ndarray, min_jitter: float = 0.0
) -> Tuple[np.ndarray, float]:
    """
    Lower Cholesky factor with jitter escalation.

    Args:
        matrix: Symmetric matrix to factorize.
        min_jitter: Smallest jitter to try (0 tries the plain matrix first).

    Returns:
        Tuple of (lower factor, applied jitter).

    Raises:
        SingularKernelError: If the factorization fails at the largest jitter.
    """
    n = matrix.shape[0]
    if n == 0:
        return np.zeros((0, 0)), float(min_jitter)

    ladder = [j for j in (0.0,) + JITTER_LADDER if j >= min_jitter]
    if min_jitter > 0.0 and min_jitter not in ladder:
        ladder.insert(0, min_jitter)
    if not ladder:
        ladder = [min_jitter]

    for jitter in ladder:
        try:
            chol = cholesky(matrix + jitter * np.eye(n), lower=True, check_finite=True)
        except (LinAlgError, ValueError):
            continue
        if jitter > 0.0:
            logger.debug(f"Cholesky needed jitter {jitter:.1e} (n={n})")
        return chol, jitter

    raise SingularKernelError(
        f"Kernel matrix of size {n} is not positive definite with jitter up to {ladder[-1]:.1e}"
    )


def build_model(
    X: np.ndarray,
    Y: np.ndarray,
    kernel: KernelParams,
    min_jitter: float = 0.0,
    metadata: Optional[dict] = None,
) -> GpModel:
    """
    Precompute the factorization shared by every prediction.

    Args:
        X: Training inputs, shape (N, n). N = 0 gives the prior model.
        Y: Training targets, shape (N,).
        kernel: Hyperparameters.
        min_jitter: Starting point of the jitter escalation.
        metadata: Free-form annotations stored with the model.

    Returns:
        Immutable GpModel.

    Raises:
        ContractViolationError: On shape mismatch.
        SingularKernelError: If K + sigma_n^2 I cannot be factorized.
    """
    X = np.asarray(X, dtype=float).reshape(-1, kernel.input_dim)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if X.shape[0] != Y.shape[0]:
        raise ContractViolationError(
            f"Got {X.shape[0]} inputs but {Y.shape[0]} targets"
        )
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ContractViolationError("Training data must be finite")

    N = X.shape[0]
    gram = kernel_matrix(kernel, X, X) + kernel.noise_variance * np.eye(N)
    chol, jitter = stable_cholesky(gram, min_jitter=min_jitter)
    alpha = cho_solve((chol, True), Y) if N > 0 else np.zeros(0)

    return GpModel(
        inputs=X,
        targets=Y,
        kernel=kernel,
        chol=chol,
        alpha=alpha,
        jitter=jitter,
        metadata=dict(metadata or {}),
    )


def prior_model(kernel: KernelParams) -> GpModel:
    """Model with no data (N = 0)."""
    return build_model(np.zeros((0, kernel.input_dim)), np.zeros(0), kernel)


def _query_rows(model: GpModel, Xstar: np.ndarray) -> np.ndarray:
    Xstar = np.asarray(Xstar, dtype=float)
    if Xstar.ndim == 1:
        Xstar = Xstar.reshape(1, -1)
    if Xstar.ndim != 2 or Xstar.shape[1] != model.input_dim or Xstar.shape[0] < 1:
        raise ContractViolationError(
            f"Query inputs have shape {Xstar.shape}, expected (M>=1, {model.input_dim})"
        )
    return Xstar


def predict_mean(model: GpModel, Xstar: np.ndarray) -> np.ndarray:
    """
    Predictive mean only.

    Args:
        model: Trained model.
        Xstar: Query inputs, shape (M, n).

    Returns:
        Mean vector of shape (M,).
    """
    Xstar = _query_rows(model, Xstar)
    if model.is_prior:
        return np.zeros(Xstar.shape[0])
    return kernel_matrix(model.kernel, Xstar, model.inputs) @ model.alpha


def predict(model: GpModel, Xstar: np.ndarray) -> GpPrediction:
    """
    Joint predictive mean and posterior covariance.

    Args:
        model: Trained model.
        Xstar: Query inputs, shape (M, n).

    Returns:
        GpPrediction with mean (M,) and symmetric covariance (M, M).
    """
    Xstar = _query_rows(model, Xstar)
    k_ss = kernel_matrix(model.kernel, Xstar, Xstar)
    if model.is_prior:
        return GpPrediction(mean=np.zeros(Xstar.shape[0]), covariance=k_ss)

    k_s = kernel_matrix(model.kernel, Xstar, model.inputs)
    mean = k_s @ model.alpha
    v = solve_triangular(model.chol, k_s.T, lower=True)
    covariance = k_ss - v.T @ v
    covariance = 0.5 * (covariance + covariance.T)
    return GpPrediction(mean=mean, covariance=covariance)


def mean_gradient(model: GpModel, xstar: np.ndarray) -> np.ndarray:
    """
    Analytic gradient of the predictive mean.

    grad mu(x*) = K^(1,0)(x*, X)^T (K + sigma_n^2 I)^-1 Y

    Args:
        model: Trained model.
        xstar: Query input, shape (n,).

    Returns:
        Gradient vector of shape (n,).
    """
    xstar = _query_rows(model, xstar)[0]
    if model.is_prior:
        return np.zeros(model.input_dim)
    return kernel_input_jacobian(model.kernel, xstar, model.inputs) @ model.alpha


def save_model(model: GpModel, path: Union[str, Path]) -> Path:
    """Write a model to a ``*.gp`` structured text file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.to_json(), encoding="utf-8")
    logger.debug(f"Saved GP model with {model.num_points} points to {path}")
    return path


def load_model(path: Union[str, Path]) -> GpModel:
    """Read a model written by ``save_model``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"GP model file not found: {path}")
    return GpModel.from_dict(json.loads(path.read_text(encoding="utf-8")))
