"""
Data models for the kinematic bicycle simulator.

States, controls, geometry and the per-step observation that feeds the
three dynamics GPs.
"""

from dataclasses import asdict, dataclass, field
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class VehicleParams:
    """
    Bicycle geometry.

    Attributes:
        l_f: Distance from the center of mass to the front axle (m).
        l_r: Distance from the center of mass to the rear axle (m).
    """

    l_f: float = 0.205
    l_r: float = 0.386

    @property
    def rear_ratio(self) -> float:
        """l_r / (l_f + l_r)."""
        return self.l_r / (self.l_f + self.l_r)

    @classmethod
    def from_config(cls, config) -> "VehicleParams":
        """Create from a ``VehicleConfig``."""
        return cls(l_f=config.l_f, l_r=config.l_r)


@dataclass(frozen=True)
class VehicleState:
    """
    Planar vehicle state.

    Attributes:
        x: Position (m).
        y: Position (m).
        theta: Heading (rad), wrapped to (-pi, pi] by the simulator.
        v: Speed (m/s).
    """

    x: float
    y: float
    theta: float
    v: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        """[x, y, theta, v]."""
        return np.array([self.x, self.y, self.theta, self.v])

    @classmethod
    def from_array(cls, values) -> "VehicleState":
        x, y, theta, v = (float(val) for val in values)
        return cls(x=x, y=y, theta=theta, v=v)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ControlInput:
    """
    Actuator command held constant over one sampling interval.

    Attributes:
        accel: Longitudinal acceleration a (m/s^2).
        steer: Steering angle alpha (rad).
    """

    accel: float
    steer: float

    def as_array(self) -> np.ndarray:
        return np.array([self.accel, self.steer])

    @classmethod
    def from_array(cls, values) -> "ControlInput":
        accel, steer = (float(val) for val in values)
        return cls(accel=accel, steer=steer)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StepObservation:
    """
    One-step increments and the GP regressors that produced them.

    Attributes:
        dx: Position increment along x (m).
        dy: Position increment along y (m).
        dtheta: Heading increment (rad), not wrapped.
        gp_input_p: Position-model regressor [cos theta, sin theta, v, alpha].
        gp_input_a: Heading-model regressor [v, alpha].
    """

    dx: float
    dy: float
    dtheta: float
    gp_input_p: Tuple[float, float, float, float] = field(default=(1.0, 0.0, 0.0, 0.0))
    gp_input_a: Tuple[float, float] = field(default=(0.0, 0.0))

    @property
    def increments(self) -> np.ndarray:
        """[dx, dy, dtheta]."""
        return np.array([self.dx, self.dy, self.dtheta])

    def is_finite(self) -> bool:
        values = np.concatenate([self.increments, self.gp_input_p, self.gp_input_a])
        return bool(np.all(np.isfinite(values)))

    def to_dict(self) -> dict:
        return {
            "dx": self.dx,
            "dy": self.dy,
            "dtheta": self.dtheta,
            "gp_input_p": list(self.gp_input_p),
            "gp_input_a": list(self.gp_input_a),
        }
