"""
Receding-horizon controller: reference and corridor construction, warm
starting and one SCP solve per time step.
"""

from typing import TYPE_CHECKING, Optional, Tuple
import logging
import time

import numpy as np

from config.schemas import ControllerConfig, FreeSpaceBounds, ScpConfig
from rhalc_controller.corridor import (
    Corridor,
    ReferenceWindow,
    box_corridor,
    build_corridor,
    hold_reference,
    track_reference,
)
from rhalc_controller.models import StepDiagnostics, VehicleModels
from scp_solver.exceptions import SolverStalledError
from scp_solver.rhalc import shift_warm_start, solve_rhalc
from vehicle_sim.models import ControlInput, VehicleState

if TYPE_CHECKING:
    from track_scenarios.track import Track

logger = logging.getLogger(__name__)


def fallback_control(state: VehicleState, config: ControllerConfig) -> ControlInput:
    """Strongest braking that keeps the next speed at or above v_min, zero steering."""
    accel = max(config.a_min, (config.v_min - state.v) / config.dt)
    return ControlInput(accel=float(min(accel, config.a_max)), steer=0.0)


def sanitize_controls(controls: np.ndarray, v0: float, config: ControllerConfig) -> np.ndarray:
    """
    Clip a control sequence to the input bounds and restrict the
    accelerations so that the speed profile stays in [v_min, v_max].
    """
    U = np.array(controls, dtype=float).reshape(-1, 2)
    U[:, 1] = np.clip(U[:, 1], config.steer_min, config.steer_max)
    v = v0
    for k in range(U.shape[0]):
        lo = max(config.a_min, (config.v_min - v) / config.dt)
        hi = min(config.a_max, (config.v_max - v) / config.dt)
        U[k, 0] = float(np.clip(U[k, 0], min(lo, hi), max(lo, hi)))
        v += config.dt * U[k, 0]
    return U


class RhalcController:
    """
    Stateful planner for one episode.

    Keeps the previous solution for warm starting and the last arc length
    for windowed projection onto the track.
    """

    def __init__(
        self,
        config: ControllerConfig,
        scp_config: Optional[ScpConfig] = None,
        track: Optional["Track"] = None,
        free_space: Optional[FreeSpaceBounds] = None,
    ):
        if track is None and free_space is None:
            raise ValueError("Either a track or free-space bounds are required")
        self.config = config
        self.scp_config = scp_config or ScpConfig()
        self.track = track
        self.free_space = free_space
        self.warm_start: Optional[np.ndarray] = None
        self.s_hint: Optional[float] = None

    @property
    def planning_half_width(self) -> float:
        return max(self.track.half_width - self.config.corridor_margin, 1e-3)

    def horizon_constraints(self, state: VehicleState) -> Tuple[ReferenceWindow, Corridor]:
        """Reference window and corridor for a solve from ``state``."""
        H = self.config.horizon
        if self.track is None:
            return hold_reference(state.position, H), box_corridor(self.free_space, H)
        reference = track_reference(
            self.track,
            state.position,
            H,
            self.config.target_speed * self.config.dt,
            s_hint=self.s_hint,
        )
        return reference, build_corridor(self.track, reference, self.planning_half_width)

    def plan_step(self, t: int, state: VehicleState, models: VehicleModels) -> Tuple[ControlInput, StepDiagnostics]:
        """
        Solve the horizon problem at time ``t`` and return its first control.

        Args:
            t: Time index.
            state: Current truth state.
            models: Current dynamics models.

        Returns:
            Tuple of (control within the input bounds, diagnostics). When the
            solver stalls the fallback control is returned and flagged.
        """
        H = self.config.horizon
        reference, corridor = self.horizon_constraints(state)
        if self.track is not None:
            self.s_hint = self.track.project(state.position, s_hint=self.s_hint)

        warm = np.zeros((H, 2)) if self.warm_start is None else self.warm_start
        warm = sanitize_controls(warm, state.v, self.config)

        started = time.perf_counter()
        try:
            U, scp_state = solve_rhalc(
                models, state, reference, corridor, self.config, self.scp_config, warm_start=warm
            )
        except SolverStalledError as e:
            solve_ms = 1e3 * (time.perf_counter() - started)
            logger.warning(f"Step {t}: {e}; applying fallback control")
            self.warm_start = None
            diagnostics = StepDiagnostics(step=t, solve_ms=solve_ms, fallback=True)
            if e.state is not None:
                diagnostics.scp = e.state.to_dict()
            return fallback_control(state, self.config), diagnostics

        solve_ms = 1e3 * (time.perf_counter() - started)
        self.warm_start = shift_warm_start(U)
        logger.debug(
            f"Step {t}: {scp_state.iteration} SCP iterations, "
            f"{scp_state.accepted_count} accepted, {solve_ms:.1f} ms"
        )
        control = ControlInput.from_array(U[0])
        return control, StepDiagnostics(step=t, solve_ms=solve_ms, scp=scp_state.to_dict())
