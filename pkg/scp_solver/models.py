"""
Data models for the successive convex programming loop.

Horizon plans produced by GP rollouts, per-iteration records and the
loop state that the trust-region update works on.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from vehicle_sim.models import VehicleState


@dataclass(frozen=True)
class HorizonPlan:
    """
    Controls and the GP-mean rollout they induce over H steps.

    Attributes:
        initial_state: State at the start of the horizon.
        controls: [a_k, alpha_k], shape (H, 2).
        means: Predicted increments [dx_k, dy_k, dtheta_k], shape (H, 3).
        positions: p_0..p_H, shape (H + 1, 2).
        headings: theta_0..theta_H (accumulated, not wrapped), shape (H + 1,).
        speeds: v_0..v_H, shape (H + 1,).
        inputs_p: Position-model regressors, shape (H, 4).
        inputs_a: Heading-model regressors, shape (H, 2).
    """

    initial_state: VehicleState
    controls: np.ndarray
    means: np.ndarray
    positions: np.ndarray
    headings: np.ndarray
    speeds: np.ndarray
    inputs_p: np.ndarray
    inputs_a: np.ndarray

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "initial_state": self.initial_state.to_dict(),
            "controls": self.controls.tolist(),
            "means": self.means.tolist(),
            "positions": self.positions.tolist(),
            "headings": self.headings.tolist(),
            "speeds": self.speeds.tolist(),
        }


@dataclass(frozen=True)
class IterationRecord:
    """
    One pass of the trust-region loop.

    Attributes:
        iteration: 1-based iteration number.
        rho: Trust radius the subproblem was solved with.
        delta: Actual cost decrease (nan when not evaluated).
        delta_tilde: Decrease predicted by the subproblem (nan on QP failure).
        ratio: delta / delta_tilde (nan when not evaluated).
        accepted: Whether the candidate became the new iterate.
        qp_status: Subproblem outcome.
        phi: Penalized cost of the iterate after this pass.
    """

    iteration: int
    rho: float
    delta: float
    delta_tilde: float
    ratio: float
    accepted: bool
    qp_status: str
    phi: float

    def to_dict(self) -> dict:
        def clean(value: float) -> Optional[float]:
            return None if not np.isfinite(value) else float(value)

        return {
            "iteration": self.iteration,
            "rho": self.rho,
            "delta": clean(self.delta),
            "delta_tilde": clean(self.delta_tilde),
            "ratio": clean(self.ratio),
            "accepted": self.accepted,
            "qp_status": self.qp_status,
            "phi": clean(self.phi),
        }


@dataclass
class ScpState:
    """
    Mutable state of the trust-region loop.

    ``rho`` always equals ``rho0 * beta_fail**fail_count * beta_succ**success_count``.
    """

    rho: float
    phi: float
    iteration: int = 0
    history: List[IterationRecord] = field(default_factory=list)
    success_count: int = 0
    fail_count: int = 0
    accepted_count: int = 0
    qp_failures: int = 0
    converged: bool = False
    termination: str = ""
    wall_time: float = 0.0

    @property
    def accepted_phis(self) -> List[float]:
        """Penalized cost after every accepted iteration."""
        return [record.phi for record in self.history if record.accepted]

    def to_dict(self, include_history: bool = True) -> Dict[str, Any]:
        """Diagnostics record for the solver log."""
        data: Dict[str, Any] = {
            "iterations": self.iteration,
            "accepted": self.accepted_count,
            "qp_failures": self.qp_failures,
            "final_rho": self.rho,
            "phi": self.phi if np.isfinite(self.phi) else None,
            "converged": self.converged,
            "termination": self.termination,
            "wall_time": self.wall_time,
        }
        if include_history:
            data["history"] = [record.to_dict() for record in self.history]
        return data


@dataclass(frozen=True)
class ConvexStep:
    """
    Solution of one convexified subproblem.

    Attributes:
        candidate: Proposed next iterate.
        model_cost: Value of the convex model at the candidate.
        status: Subproblem solver status.
    """

    candidate: np.ndarray
    model_cost: float
    status: str = "solved"


@dataclass(frozen=True)
class ScpResult:
    """Final iterate and loop state of a solve."""

    iterate: np.ndarray
    state: ScpState


