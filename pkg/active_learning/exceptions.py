"""Exceptions raised by the active learning package."""


class DegenerateEntropyError(ArithmeticError):
    """Raised when the jittered horizon covariance is not positive definite."""
