"""
Successive convex programming for receding-horizon active learning.

GP rollouts, the exact penalized cost, a generic trust-region loop and
the vehicle planning problem built on it.
"""

from config.schemas import ScpConfig
from scp_solver.cost import CostBreakdown, exact_penalty_cost
from scp_solver.exceptions import SolverStalledError
from scp_solver.models import (
    ConvexStep,
    HorizonPlan,
    IterationRecord,
    ScpResult,
    ScpState,
)
from scp_solver.rhalc import RhalcProblem, shift_warm_start, solve_rhalc
from scp_solver.rollout import simulate_gp_rollout
from scp_solver.solver import ConvexifiableProblem, SequentialConvexSolver

__all__ = [
    "CostBreakdown",
    "exact_penalty_cost",
    "SolverStalledError",
    "ConvexStep",
    "HorizonPlan",
    "IterationRecord",
    "ScpConfig",
    "ScpResult",
    "ScpState",
    "RhalcProblem",
    "shift_warm_start",
    "solve_rhalc",
    "simulate_gp_rollout",
    "ConvexifiableProblem",
    "SequentialConvexSolver",
]
