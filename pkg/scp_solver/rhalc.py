"""
The receding-horizon active learning and control problem as a
convexifiable problem: GP rollout for the exact cost, linearized QP for
the model.
"""

from typing import TYPE_CHECKING, Dict, Optional, Tuple
import logging

import numpy as np

from config.schemas import ScpConfig
from qp_subproblem.admm import solve_qp
from qp_subproblem.builder import build_subproblem
from qp_subproblem.exceptions import SubproblemBuildError
from qp_subproblem.models import QpTolerances
from scp_solver.cost import CostBreakdown, exact_penalty_cost
from scp_solver.models import ConvexStep, HorizonPlan, ScpState
from scp_solver.rollout import simulate_gp_rollout
from scp_solver.solver import SequentialConvexSolver
from vehicle_sim.models import VehicleState

if TYPE_CHECKING:
    from config.schemas import ControllerConfig
    from rhalc_controller.corridor import Corridor, ReferenceWindow
    from rhalc_controller.models import VehicleModels

logger = logging.getLogger(__name__)


def shift_warm_start(controls: np.ndarray) -> np.ndarray:
    """Drop the first control and repeat the last one."""
    U = np.asarray(controls, dtype=float).reshape(-1, 2)
    return np.vstack([U[1:], U[-1:]])


class RhalcProblem:
    """
    One receding-horizon planning problem over the control sequence.

    The subproblem is first solved with hard corridor and speed rows; when
    that fails it is rebuilt with those rows hinge-penalized.
    """

    def __init__(
        self,
        models: "VehicleModels",
        initial_state: VehicleState,
        reference: "ReferenceWindow",
        corridor: "Corridor",
        config: "ControllerConfig",
    ):
        self.models = models
        self.initial_state = initial_state
        self.reference = reference
        self.corridor = corridor
        self.config = config
        self.tolerances = QpTolerances.from_config(config.qp)
        self._plans: Dict[bytes, HorizonPlan] = {}
        self.elastic_solves = 0

    def plan(self, controls: np.ndarray) -> HorizonPlan:
        """GP rollout of ``controls`` (cached per iterate)."""
        U = np.asarray(controls, dtype=float).reshape(-1, 2)
        key = U.tobytes()
        if key not in self._plans:
            if len(self._plans) > 8:
                self._plans.clear()
            self._plans[key] = simulate_gp_rollout(self.models, U, self.initial_state, self.config.dt)
        return self._plans[key]

    def breakdown(self, controls: np.ndarray) -> CostBreakdown:
        return exact_penalty_cost(self.plan(controls), self.models, self.config, self.reference, self.corridor)

    def evaluate(self, iterate: np.ndarray) -> float:
        return self.breakdown(iterate).total

    def _clip(self, U: np.ndarray) -> np.ndarray:
        cfg = self.config
        return np.column_stack(
            [np.clip(U[:, 0], cfg.a_min, cfg.a_max), np.clip(U[:, 1], cfg.steer_min, cfg.steer_max)]
        )

    def solve_subproblem(self, iterate: np.ndarray, rho: float) -> Optional[ConvexStep]:
        nominal = self.plan(iterate)
        for elastic in (False, True):
            try:
                sub = build_subproblem(
                    self.models, nominal, self.config, self.reference, self.corridor, rho, elastic=elastic
                )
            except SubproblemBuildError as e:
                logger.warning(f"Subproblem build failed: {e}")
                return None
            solution = solve_qp(sub.problem, self.tolerances)
            if solution.is_solved:
                if elastic:
                    self.elastic_solves += 1
                return ConvexStep(
                    candidate=self._clip(sub.candidate_controls(solution.x)),
                    model_cost=solution.objective,
                    status="solved-elastic" if elastic else "solved",
                )
            logger.debug(f"QP {'elastic' if elastic else 'hard'} mode ended with {solution.status.value}")
        return None


def solve_rhalc(
    models: "VehicleModels",
    initial_state: VehicleState,
    reference: "ReferenceWindow",
    corridor: "Corridor",
    config: "ControllerConfig",
    scp_config: Optional[ScpConfig] = None,
    warm_start: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, ScpState]:
    """
    Plan a control sequence with the trust-region loop.

    Args:
        models: The three dynamics GPs.
        initial_state: Current state.
        reference: Reference positions r_1..r_H.
        corridor: Half-plane sets for p_1..p_H.
        config: Controller weights, bounds and entropy weight.
        scp_config: Trust-region parameters.
        warm_start: Initial controls (H, 2); zeros when omitted.

    Returns:
        Tuple of (last accepted controls (H, 2), loop state).

    Raises:
        SolverStalledError: If no subproblem could be solved.
    """
    H = config.horizon
    U0 = np.zeros((H, 2)) if warm_start is None else np.asarray(warm_start, dtype=float).reshape(H, 2)
    problem = RhalcProblem(models, initial_state, reference, corridor, config)
    result = SequentialConvexSolver(scp_config).solve(problem, U0)
    return result.iterate, result.state
