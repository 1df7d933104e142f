"""
Penalized convex subproblems.

Sparse QP data model, an ADMM solver with active-set polishing, and the
assembly of the linearized horizon problem.
"""

from qp_subproblem.admm import kkt_residuals, solve_qp
from qp_subproblem.builder import Subproblem, VariableLayout, build_subproblem, zero_step
from qp_subproblem.exceptions import SubproblemBuildError
from qp_subproblem.models import KktResiduals, QpProblem, QpSolution, QpStatus, QpTolerances

__all__ = [
    "kkt_residuals",
    "solve_qp",
    "Subproblem",
    "VariableLayout",
    "build_subproblem",
    "zero_step",
    "SubproblemBuildError",
    "KktResiduals",
    "QpProblem",
    "QpSolution",
    "QpStatus",
    "QpTolerances",
]
