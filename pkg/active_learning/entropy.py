"""
Conditional differential entropy of joint GP predictions.

For H horizon inputs the entropy is, up to constants,

    H(X) = log det(Sigma(X) + j I),   j = 1e-9 * tr(Sigma(X)) / H

where Sigma is the posterior covariance of the GP at X. The input
gradient uses

    d log det S / d nu = tr(S^-1 dS/d nu)
    dSigma/d nu = dK**/d nu - 2 K* (K + sigma_n^2 I)^-1 (dK*/d nu)^T   (symmetrized)

and includes the derivative of the trace-scaled jitter.
"""

from typing import Sequence, Tuple, Union
import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky

from active_learning.exceptions import DegenerateEntropyError
from active_learning.models import EntropyEval
from gp_regression.exceptions import ContractViolationError
from gp_regression.kernels import kernel_matrix
from gp_regression.models.gp import GpModel

logger = logging.getLogger(__name__)

# Relative log-det jitter: j = LOGDET_JITTER * tr(Sigma) / H
LOGDET_JITTER = 1e-9

InputSet = Union[np.ndarray, Sequence[Sequence[float]]]


def logdet_jitter(covariance: np.ndarray) -> float:
    """Diagonal jitter applied before the log-det factorization."""
    covariance = np.atleast_2d(covariance)
    return LOGDET_JITTER * float(np.trace(covariance)) / covariance.shape[0]


def _input_rows(model: GpModel, Xset: InputSet) -> np.ndarray:
    Xset = np.asarray(Xset, dtype=float)
    if Xset.ndim == 1:
        Xset = Xset.reshape(1, -1)
    if Xset.ndim != 2 or Xset.shape[0] < 1 or Xset.shape[1] != model.input_dim:
        raise ContractViolationError(
            f"Horizon inputs have shape {Xset.shape}, expected (H>=1, {model.input_dim})"
        )
    if not np.all(np.isfinite(Xset)):
        raise ContractViolationError("Horizon inputs must be finite")
    return Xset


def _posterior_terms(model: GpModel, Xset: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (Sigma, K*, (K + sigma_n^2 I)^-1 K*^T)."""
    k_ss = kernel_matrix(model.kernel, Xset, Xset)
    if model.is_prior:
        return k_ss, np.zeros((Xset.shape[0], 0)), np.zeros((0, Xset.shape[0]))
    k_s = kernel_matrix(model.kernel, Xset, model.inputs)
    solved = cho_solve((model.chol, True), k_s.T)
    sigma = k_ss - k_s @ solved
    return 0.5 * (sigma + sigma.T), k_s, solved


def _jittered_factor(sigma: np.ndarray) -> Tuple[np.ndarray, float]:
    jitter = logdet_jitter(sigma)
    try:
        chol = cholesky(sigma + jitter * np.eye(sigma.shape[0]), lower=True)
    except (LinAlgError, ValueError) as e:
        raise DegenerateEntropyError(
            f"Horizon covariance (H={sigma.shape[0]}) is not positive definite "
            f"after jitter {jitter:.2e}"
        ) from e
    return chol, jitter


def _kss_row_derivative(model: GpModel, Xset: np.ndarray, k_ss: np.ndarray) -> np.ndarray:
    """G[d, i, q] = d k(x_i, x_q) / d x_{i,d}, shape (n, H, H)."""
    ell2 = model.kernel.lengthscale_array ** 2
    diff = Xset[:, None, :] - Xset[None, :, :]
    return np.moveaxis(-(diff / ell2) * k_ss[:, :, None], 2, 0)


def _cross_row_derivative(model: GpModel, Xset: np.ndarray, k_s: np.ndarray) -> np.ndarray:
    """R[d, i, m] = d k(x_i, X_m) / d x_{i,d}, shape (n, H, N)."""
    ell2 = model.kernel.lengthscale_array ** 2
    diff = Xset[:, None, :] - model.inputs[None, :, :]
    return np.moveaxis(-(diff / ell2) * k_s[:, :, None], 2, 0)


def entropy(model: GpModel, Xset: InputSet) -> float:
    """
    Log-det entropy of the joint prediction at the horizon inputs.

    Args:
        model: Trained GP.
        Xset: H inputs, shape (H, n).

    Returns:
        log det(Sigma + jitter I).

    Raises:
        DegenerateEntropyError: If the jittered covariance is indefinite.
    """
    Xset = _input_rows(model, Xset)
    sigma, _, _ = _posterior_terms(model, Xset)
    chol, _ = _jittered_factor(sigma)
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def covariance_input_jacobian(model: GpModel, Xset: InputSet, j: int) -> np.ndarray:
    """
    Derivative of the posterior covariance with respect to one input coordinate.

    Args:
        model: Trained GP.
        Xset: H inputs, shape (H, n).
        j: Flat index i*n + d of coordinate d of horizon point i.

    Returns:
        Symmetric (H, H) matrix dSigma/dnu_j.
    """
    Xset = _input_rows(model, Xset)
    H, n = Xset.shape
    if not 0 <= j < H * n:
        raise ContractViolationError(f"Flat index {j} outside [0, {H * n})")
    i, d = divmod(j, n)

    k_ss = kernel_matrix(model.kernel, Xset, Xset)
    g_row = _kss_row_derivative(model, Xset, k_ss)[d, i]
    d_kss = np.zeros((H, H))
    d_kss[i, :] += g_row
    d_kss[:, i] += g_row

    if model.is_prior:
        return d_kss

    k_s = kernel_matrix(model.kernel, Xset, model.inputs)
    d_ks = np.zeros_like(k_s)
    d_ks[i, :] = _cross_row_derivative(model, Xset, k_s)[d, i]
    cross = k_s @ cho_solve((model.chol, True), d_ks.T)
    raw = d_kss - 2.0 * cross
    return 0.5 * (raw + raw.T)


def entropy_eval(model: GpModel, Xset: InputSet) -> EntropyEval:
    """
    Entropy value and gradient from a single factorization.

    Args:
        model: Trained GP.
        Xset: H inputs, shape (H, n).

    Returns:
        EntropyEval with the gradient ordered by time step then dimension.

    Raises:
        DegenerateEntropyError: If the jittered covariance is indefinite.
    """
    Xset = _input_rows(model, Xset)
    H, n = Xset.shape
    sigma, k_s, solved = _posterior_terms(model, Xset)
    chol, jitter = _jittered_factor(sigma)
    value = float(2.0 * np.sum(np.log(np.diag(chol))))
    weight = cho_solve((chol, True), np.eye(H))

    k_ss = kernel_matrix(model.kernel, Xset, Xset)
    g = _kss_row_derivative(model, Xset, k_ss)
    if model.is_prior:
        h = np.zeros((n, H, H))
    else:
        h = _cross_row_derivative(model, Xset, k_s) @ solved

    # tr(W dSigma) for dSigma = e_i r^T + r e_i^T with r = G[d, i] - Hmat[d, i]
    rows = g - h
    trace_term = 2.0 * np.einsum("iq,diq->id", weight, rows)
    # d tr(Sigma) / d x_{i,d} = -2 Hmat[d, i, i]
    d_trace = -2.0 * np.einsum("dii->id", h)
    grad = trace_term + (LOGDET_JITTER / H) * d_trace * np.trace(weight)

    if not np.all(np.isfinite(grad)):
        raise DegenerateEntropyError("Entropy gradient is not finite")
    logger.debug(f"Entropy over H={H}: value={value:.4f}, jitter={jitter:.2e}")
    return EntropyEval(value=value, gradient=grad.reshape(-1), jitter=jitter)


def entropy_gradient(model: GpModel, Xset: InputSet) -> np.ndarray:
    """Flat entropy gradient of length H*n (see ``entropy_eval``)."""
    return entropy_eval(model, Xset).gradient
