"""Additive Gaussian observation noise on the one-step increments."""

from dataclasses import replace
from typing import Sequence, Union

import numpy as np

from vehicle_sim.models import StepObservation

# Per-step noise std on (dx [m], dy [m], dtheta [rad])
DEFAULT_NOISE_STD = (0.005, 0.005, 0.002)

RngLike = Union[int, np.random.Generator, None]


def observe_noisy(
    obs: StepObservation,
    sigma: Sequence[float] = DEFAULT_NOISE_STD,
    rng: RngLike = None,
) -> StepObservation:
    """
    Corrupt the increments with i.i.d. zero-mean Gaussian noise.

    The regressors are left untouched.

    Args:
        obs: Noiseless observation.
        sigma: Standard deviations for (dx, dy, dtheta).
        rng: Generator, or seed for a fresh one.

    Returns:
        New observation.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (3,) or np.any(sigma < 0):
        raise ValueError(f"sigma must be 3 non-negative values, got {sigma}")
    generator = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    noise = generator.normal(0.0, 1.0, size=3) * sigma
    return replace(
        obs,
        dx=obs.dx + float(noise[0]),
        dy=obs.dy + float(noise[1]),
        dtheta=obs.dtheta + float(noise[2]),
    )
