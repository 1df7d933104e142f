"""
Ground-truth kinematic bicycle dynamics.

    x'     = v cos(theta + beta)
    y'     = v sin(theta + beta)
    theta' = (v / l_r) sin(beta)
    v'     = a
    beta   = atan(l_r / (l_f + l_r) * tan(alpha))

One sampling interval is integrated with a single classical RK4 step.
"""

from typing import List, Sequence, Tuple
import math

import numpy as np

from vehicle_sim.exceptions import SteeringDomainError
from vehicle_sim.models import ControlInput, StepObservation, VehicleParams, VehicleState

DEFAULT_PARAMS = VehicleParams()


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def slip_angle(steer: float, l_f: float = DEFAULT_PARAMS.l_f, l_r: float = DEFAULT_PARAMS.l_r) -> float:
    """
    Slip angle of the velocity at the center of mass.

    Raises:
        SteeringDomainError: If |steer| >= pi/2.
    """
    if not abs(steer) < math.pi / 2:
        raise SteeringDomainError(f"Steering angle {steer} outside (-pi/2, pi/2)")
    return math.atan(l_r / (l_f + l_r) * math.tan(steer))


def _derivative(z: np.ndarray, accel: float, beta: float, l_r: float) -> np.ndarray:
    _, _, theta, v = z
    return np.array(
        [
            v * math.cos(theta + beta),
            v * math.sin(theta + beta),
            v / l_r * math.sin(beta),
            accel,
        ]
    )


def continuous_derivative(
    s: VehicleState, u: ControlInput, params: VehicleParams = DEFAULT_PARAMS
) -> np.ndarray:
    """Time derivative [x', y', theta', v'] at state s under control u."""
    beta = slip_angle(u.steer, params.l_f, params.l_r)
    return _derivative(s.as_array(), u.accel, beta, params.l_r)


def regressors(s: VehicleState, u: ControlInput) -> Tuple[np.ndarray, np.ndarray]:
    """GP inputs x_p = [cos theta, sin theta, v, alpha] and x_a = [v, alpha]."""
    x_p = np.array([math.cos(s.theta), math.sin(s.theta), s.v, u.steer])
    x_a = np.array([s.v, u.steer])
    return x_p, x_a


def step_truth(
    s: VehicleState,
    u: ControlInput,
    dt: float = 0.2,
    params: VehicleParams = DEFAULT_PARAMS,
) -> Tuple[VehicleState, StepObservation]:
    """
    Advance the truth model by one sampling interval.

    Args:
        s: Current state.
        u: Control held over the interval.
        dt: Sampling time (s).
        params: Vehicle geometry.

    Returns:
        Tuple of (next state with wrapped heading, noiseless observation).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    beta = slip_angle(u.steer, params.l_f, params.l_r)
    z = s.as_array()

    k1 = _derivative(z, u.accel, beta, params.l_r)
    k2 = _derivative(z + 0.5 * dt * k1, u.accel, beta, params.l_r)
    k3 = _derivative(z + 0.5 * dt * k2, u.accel, beta, params.l_r)
    k4 = _derivative(z + dt * k3, u.accel, beta, params.l_r)
    delta = dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    x_p, x_a = regressors(s, u)
    obs = StepObservation(
        dx=float(delta[0]),
        dy=float(delta[1]),
        dtheta=float(delta[2]),
        gp_input_p=tuple(float(val) for val in x_p),
        gp_input_a=tuple(float(val) for val in x_a),
    )
    next_state = VehicleState(
        x=s.x + obs.dx,
        y=s.y + obs.dy,
        theta=wrap_angle(s.theta + obs.dtheta),
        v=s.v + dt * u.accel,
    )
    return next_state, obs


def rollout_truth(
    s: VehicleState,
    controls: Sequence[ControlInput],
    dt: float = 0.2,
    params: VehicleParams = DEFAULT_PARAMS,
) -> Tuple[List[VehicleState], List[StepObservation]]:
    """Apply a control sequence; returns the visited states (initial included)."""
    states, observations = [s], []
    for u in controls:
        s, obs = step_truth(s, u, dt, params)
        states.append(s)
        observations.append(obs)
    return states, observations
