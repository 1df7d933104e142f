"""Exceptions raised by the successive convex programming loop."""

from typing import Any, Optional

import numpy as np


class SolverStalledError(RuntimeError):
    """
    Raised when no subproblem of a solve could be solved.

    Attributes:
        warm_start: The iterate the solve started from.
        state: Loop state at termination (``ScpState``), if one was created.
    """

    def __init__(self, message: str, warm_start: np.ndarray, state: Optional[Any] = None):
        super().__init__(message)
        self.warm_start = np.asarray(warm_start)
        self.state = state
