"""
Data models for exact Gaussian Process regression.

Defines the squared-exponential ARD hyperparameters, the immutable
trained model with its cached Cholesky factorization, and joint
predictions.
"""

from dataclasses import dataclass, field
from typing import Tuple
import json

import numpy as np

from gp_regression.exceptions import ContractViolationError


@dataclass(frozen=True)
class KernelParams:
    """
    Squared-exponential ARD kernel hyperparameters.

    Attributes:
        signal_variance: sigma_f^2 (output units squared).
        lengthscales: One lengthscale per input dimension (input units).
        noise_variance: sigma_n^2 (output units squared).
    """

    signal_variance: float
    lengthscales: Tuple[float, ...]
    noise_variance: float

    def __post_init__(self):
        object.__setattr__(
            self, "lengthscales", tuple(float(l) for l in np.atleast_1d(self.lengthscales))
        )
        if not self.lengthscales:
            raise ContractViolationError("lengthscales must not be empty")
        values = (self.signal_variance, self.noise_variance) + self.lengthscales
        if not all(np.isfinite(v) and v > 0 for v in values):
            raise ContractViolationError(
                f"Kernel parameters must be strictly positive, got {self}"
            )

    @property
    def input_dim(self) -> int:
        """Number of input dimensions n."""
        return len(self.lengthscales)

    @property
    def lengthscale_array(self) -> np.ndarray:
        """Lengthscales as a float array."""
        return np.asarray(self.lengthscales, dtype=float)

    def to_log_vector(self) -> np.ndarray:
        """Pack as [log sigma_f, log l_1..l_n, log sigma_n] (standard deviations)."""
        return np.concatenate(
            [
                [0.5 * np.log(self.signal_variance)],
                np.log(self.lengthscale_array),
                [0.5 * np.log(self.noise_variance)],
            ]
        )

    @classmethod
    def from_log_vector(cls, theta: np.ndarray) -> "KernelParams":
        """Inverse of to_log_vector."""
        theta = np.asarray(theta, dtype=float)
        return cls(
            signal_variance=float(np.exp(2.0 * theta[0])),
            lengthscales=tuple(np.exp(theta[1:-1])),
            noise_variance=float(np.exp(2.0 * theta[-1])),
        )

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "signal_variance": self.signal_variance,
            "lengthscales": list(self.lengthscales),
            "noise_variance": self.noise_variance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KernelParams":
        """Create from dictionary."""
        return cls(
            signal_variance=float(data["signal_variance"]),
            lengthscales=tuple(data["lengthscales"]),
            noise_variance=float(data["noise_variance"]),
        )


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GpModel:
    """
    Trained exact GP with zero mean function.

    Inputs are stored row-per-sample. Models are immutable; use
    ``with_observation`` to obtain a model with one more data point.

    Attributes:
        inputs: Training inputs, shape (N, n).
        targets: Training targets, shape (N,).
        kernel: Hyperparameters.
        chol: Lower Cholesky factor of K + (sigma_n^2 + jitter) I, shape (N, N).
        alpha: (K + sigma_n^2 I)^-1 Y, shape (N,).
        jitter: Diagonal jitter that was needed for the factorization.
    """

    inputs: np.ndarray
    targets: np.ndarray
    kernel: KernelParams
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "inputs", _frozen(self.inputs).reshape(-1, self.kernel.input_dim))
        object.__setattr__(self, "targets", _frozen(self.targets).reshape(-1))
        object.__setattr__(self, "chol", _frozen(self.chol))
        object.__setattr__(self, "alpha", _frozen(self.alpha).reshape(-1))

    @property
    def num_points(self) -> int:
        """Number of training points N (0 for the prior model)."""
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        """Input dimension n."""
        return self.kernel.input_dim

    @property
    def is_prior(self) -> bool:
        """Whether the model has no data."""
        return self.num_points == 0

    def with_observation(self, x: np.ndarray, y: float) -> "GpModel":
        """Return a rebuilt model with (x, y) appended, keeping the hyperparameters."""
        from gp_regression.regressor import build_model

        inputs = np.vstack([self.inputs, np.asarray(x, dtype=float).reshape(1, -1)])
        targets = np.append(self.targets, float(y))
        return build_model(inputs, targets, self.kernel)

    def with_kernel(self, kernel: KernelParams) -> "GpModel":
        """Return the same data refactorized under new hyperparameters."""
        from gp_regression.regressor import build_model

        return build_model(self.inputs, self.targets, kernel)

    def to_dict(self) -> dict:
        """Convert to dictionary (inputs, targets, hyperparameters, jitter)."""
        return {
            "input_dim": self.input_dim,
            "inputs": self.inputs.tolist(),
            "targets": self.targets.tolist(),
            "kernel": self.kernel.to_dict(),
            "jitter": self.jitter,
            "metadata": dict(self.metadata),
        }

    def to_json(self, indent: int = 2) -> str:
        """Convert to the structured text document used for ``*.gp`` files."""
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "GpModel":
        """Rebuild a model (and its factorization) from ``to_dict`` output."""
        from gp_regression.regressor import build_model

        kernel = KernelParams.from_dict(data["kernel"])
        inputs = np.asarray(data["inputs"], dtype=float).reshape(-1, kernel.input_dim)
        return build_model(
            inputs,
            np.asarray(data["targets"], dtype=float),
            kernel,
            min_jitter=float(data.get("jitter", 0.0)),
            metadata=data.get("metadata", {}),
        )


@dataclass(frozen=True)
class GpPrediction:
    """
    Joint GP prediction at M query points.

    Attributes:
        mean: Predictive mean, shape (M,).
        covariance: Posterior covariance, shape (M, M), symmetric.
    """

    mean: np.ndarray
    covariance: np.ndarray

    @property
    def variance(self) -> np.ndarray:
        """Marginal variances (diagonal of the covariance)."""
        return np.diag(self.covariance).copy()

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {"mean": self.mean.tolist(), "covariance": self.covariance.tolist()}
