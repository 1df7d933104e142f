"""
Exact Gaussian Process regression.

Squared-exponential ARD kernel, Cholesky-based joint prediction,
analytic input-gradients of the predictive mean and type-II maximum
likelihood hyperparameter fitting.
"""

from gp_regression.exceptions import (
    ContractViolationError,
    FittingFailedError,
    GpError,
    SingularKernelError,
)
from gp_regression.fitting import fit_hyperparameters, negative_log_marginal_likelihood
from gp_regression.kernels import kernel_eval, kernel_input_jacobian, kernel_matrix
from gp_regression.models.gp import GpModel, GpPrediction, KernelParams
from gp_regression.regressor import (
    build_model,
    load_model,
    mean_gradient,
    predict,
    predict_mean,
    prior_model,
    save_model,
    stable_cholesky,
)

__all__ = [
    "ContractViolationError",
    "FittingFailedError",
    "GpError",
    "SingularKernelError",
    "fit_hyperparameters",
    "negative_log_marginal_likelihood",
    "kernel_eval",
    "kernel_input_jacobian",
    "kernel_matrix",
    "GpModel",
    "GpPrediction",
    "KernelParams",
    "build_model",
    "load_model",
    "mean_gradient",
    "predict",
    "predict_mean",
    "prior_model",
    "save_model",
    "stable_cholesky",
]
