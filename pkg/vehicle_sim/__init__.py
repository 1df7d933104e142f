"""
Kinematic bicycle truth simulator.

RK4 ground truth, noisy one-step observations and GP regressor
construction for the three dynamics models.
"""

from vehicle_sim.dynamics import (
    DEFAULT_PARAMS,
    continuous_derivative,
    regressors,
    rollout_truth,
    slip_angle,
    step_truth,
    wrap_angle,
)
from vehicle_sim.exceptions import SteeringDomainError
from vehicle_sim.models import ControlInput, StepObservation, VehicleParams, VehicleState
from vehicle_sim.noise import DEFAULT_NOISE_STD, observe_noisy

__all__ = [
    "DEFAULT_PARAMS",
    "continuous_derivative",
    "regressors",
    "rollout_truth",
    "slip_angle",
    "step_truth",
    "wrap_angle",
    "SteeringDomainError",
    "ControlInput",
    "StepObservation",
    "VehicleParams",
    "VehicleState",
    "DEFAULT_NOISE_STD",
    "observe_noisy",
]
