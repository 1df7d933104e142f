"""
Active learning objectives.

Log-det conditional entropy of joint GP predictions over a set of
horizon inputs, its covariance Jacobian and analytic input gradient.
"""

from active_learning.entropy import (
    LOGDET_JITTER,
    covariance_input_jacobian,
    entropy,
    entropy_eval,
    entropy_gradient,
    logdet_jitter,
)
from active_learning.exceptions import DegenerateEntropyError
from active_learning.models import EntropyEval

__all__ = [
    "LOGDET_JITTER",
    "covariance_input_jacobian",
    "entropy",
    "entropy_eval",
    "entropy_gradient",
    "logdet_jitter",
    "DegenerateEntropyError",
    "EntropyEval",
]
