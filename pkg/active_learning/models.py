"""Result types for entropy evaluation."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EntropyEval:
    """
    Log-det entropy of a joint GP prediction and its input gradient.

    Attributes:
        value: log det(Sigma + jitter I), nats up to an additive constant.
        gradient: Flat vector of length H*n, ordered by time step then
            input dimension.
        jitter: Diagonal jitter added before factorization.
    """

    value: float
    gradient: np.ndarray
    jitter: float = 0.0

    def gradient_matrix(self, input_dim: int) -> np.ndarray:
        """Gradient reshaped to (H, n)."""
        return self.gradient.reshape(-1, input_dim)

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "value": self.value,
            "gradient": self.gradient.tolist(),
            "jitter": self.jitter,
        }
