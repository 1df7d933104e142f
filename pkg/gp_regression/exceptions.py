"""Exceptions raised by the GP regression package."""

from typing import Optional


class GpError(Exception):
    """Base class for GP regression errors."""


class ContractViolationError(GpError, ValueError):
    """Raised when inputs violate a documented shape or value contract."""


class SingularKernelError(GpError):
    """Raised when K + sigma_n^2 I cannot be factorized even with maximum jitter."""


class FittingFailedError(GpError):
    """
    Raised when every hyperparameter restart produced a non-finite likelihood.

    Attributes:
        best_params: Best parameters seen (the initial guess if nothing better).
        best_nll: Negative log marginal likelihood of best_params (may be inf).
    """

    def __init__(self, message: str, best_params=None, best_nll: Optional[float] = None):
        super().__init__(message)
        self.best_params = best_params
        self.best_nll = best_nll
