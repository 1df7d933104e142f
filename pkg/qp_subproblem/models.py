"""
Data models for sparse convex quadratic programs.

    minimize    1/2 z^T P z + q^T z + constant
    subject to  A_eq z  = b_eq
                A_in z <= b_in
                lower <= z <= upper
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional
import json

import numpy as np
import scipy.sparse as sp


class QpStatus(str, Enum):
    """Outcome of a QP solve."""

    SOLVED = "solved"
    MAX_ITER = "max-iter"
    INFEASIBLE_NUMERICS = "infeasible-numerics"


@dataclass(frozen=True)
class QpTolerances:
    """
    Termination tolerances (infinity norms, unscaled problem).

    Attributes:
        primal: Bound on constraint violation.
        dual: Bound on the stationarity residual.
        complementarity: Bound on multiplier times constraint slack, relative
            to the largest multiplier (at least 1).
        max_iter: ADMM iteration cap.
    """

    primal: float = 1e-6
    dual: float = 1e-6
    complementarity: float = 1e-6
    max_iter: int = 4000

    @classmethod
    def from_config(cls, config) -> "QpTolerances":
        """Create from a ``QpConfig``."""
        return cls(
            primal=config.primal_tol,
            dual=config.dual_tol,
            complementarity=config.complementarity_tol,
            max_iter=config.max_iter,
        )


def _sparse(matrix, shape) -> sp.csc_matrix:
    if matrix is None:
        return sp.csc_matrix(shape)
    return sp.csc_matrix(matrix, dtype=float)


@dataclass
class QpProblem:
    """
    Convex QP with equality, inequality and box constraints.

    Attributes:
        P: Symmetric PSD cost matrix, shape (n, n).
        q: Linear cost, shape (n,).
        A_eq: Equality matrix, shape (m_eq, n).
        b_eq: Equality right-hand side, shape (m_eq,).
        A_in: Inequality matrix, shape (m_in, n).
        b_in: Inequality right-hand side, shape (m_in,).
        lower: Variable lower bounds (-inf allowed), shape (n,).
        upper: Variable upper bounds (+inf allowed), shape (n,).
        constant: Objective offset.
    """

    P: sp.csc_matrix
    q: np.ndarray
    A_eq: Optional[sp.csc_matrix] = None
    b_eq: Optional[np.ndarray] = None
    A_in: Optional[sp.csc_matrix] = None
    b_in: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    constant: float = 0.0

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(-1)
        n = self.q.shape[0]
        self.P = _sparse(self.P, (n, n))
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).reshape(-1)
        self.b_in = np.zeros(0) if self.b_in is None else np.asarray(self.b_in, dtype=float).reshape(-1)
        self.A_eq = _sparse(self.A_eq, (self.b_eq.shape[0], n))
        self.A_in = _sparse(self.A_in, (self.b_in.shape[0], n))
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).reshape(-1)

        if self.P.shape != (n, n):
            raise ValueError(f"P has shape {self.P.shape}, expected ({n}, {n})")
        for name, A, b in (("A_eq", self.A_eq, self.b_eq), ("A_in", self.A_in, self.b_in)):
            if A.shape != (b.shape[0], n):
                raise ValueError(f"{name} has shape {A.shape}, expected ({b.shape[0]}, {n})")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("Box bounds must have one entry per variable")
        if np.any(self.lower > self.upper):
            raise ValueError("Box lower bound exceeds upper bound")

    @property
    def num_vars(self) -> int:
        return self.q.shape[0]

    @property
    def num_eq(self) -> int:
        return self.b_eq.shape[0]

    @property
    def num_in(self) -> int:
        return self.b_in.shape[0]

    def objective(self, z: np.ndarray) -> float:
        """Objective value including the constant."""
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ (self.P @ z) + self.q @ z + self.constant)

    def stacked(self):
        """
        Constraints in two-sided form l <= A z <= u.

        Rows are ordered equalities, inequalities, box; box rows of variables
        without finite bounds are omitted.

        Returns:
            Tuple of (A, l, u, box_index) where box_index lists the variable
            of every box row.
        """
        n = self.num_vars
        box_index = np.flatnonzero(np.isfinite(self.lower) | np.isfinite(self.upper))
        box_rows = sp.csc_matrix(
            (np.ones(box_index.size), (np.arange(box_index.size), box_index)),
            shape=(box_index.size, n),
        )
        A = sp.vstack([self.A_eq, self.A_in, box_rows], format="csc")
        l = np.concatenate([self.b_eq, np.full(self.num_in, -np.inf), self.lower[box_index]])
        u = np.concatenate([self.b_eq, self.b_in, self.upper[box_index]])
        return A, l, u, box_index

    def to_dict(self) -> dict:
        """Dense-free dump: sparse matrices as COO triplets, infinities as null."""

        def triplets(matrix: sp.spmatrix) -> dict:
            coo = matrix.tocoo()
            return {
                "shape": list(coo.shape),
                "row": coo.row.tolist(),
                "col": coo.col.tolist(),
                "data": coo.data.tolist(),
            }

        def finite_or_none(values: np.ndarray) -> list:
            return [float(v) if np.isfinite(v) else None for v in values]

        return {
            "P": triplets(self.P),
            "q": self.q.tolist(),
            "constant": self.constant,
            "A_eq": triplets(self.A_eq),
            "b_eq": self.b_eq.tolist(),
            "A_in": triplets(self.A_in),
            "b_in": self.b_in.tolist(),
            "lower": finite_or_none(self.lower),
            "upper": finite_or_none(self.upper),
        }

    def to_json(self, indent: Optional[int] = None) -> str:
        """Structured text dump for external verification."""
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "QpProblem":
        """Inverse of ``to_dict``."""

        def matrix(entry: dict) -> sp.csc_matrix:
            return sp.csc_matrix(
                (entry["data"], (entry["row"], entry["col"])), shape=tuple(entry["shape"])
            )

        def bounds(values: list, fill: float) -> np.ndarray:
            return np.array([fill if v is None else v for v in values], dtype=float)

        return cls(
            P=matrix(data["P"]),
            q=np.asarray(data["q"], dtype=float),
            A_eq=matrix(data["A_eq"]),
            b_eq=np.asarray(data["b_eq"], dtype=float),
            A_in=matrix(data["A_in"]),
            b_in=np.asarray(data["b_in"], dtype=float),
            lower=bounds(data["lower"], -np.inf),
            upper=bounds(data["upper"], np.inf),
            constant=float(data.get("constant", 0.0)),
        )


@dataclass
class QpSolution:
    """
    Primal/dual pair returned by the solver.

    Dual signs follow the Lagrangian P z + q + A_eq^T y_eq + A_in^T y_in + y_box = 0:
    y_in >= 0, y_box > 0 at an active upper bound and < 0 at an active lower bound.

    Attributes:
        x: Primal vector.
        y_eq: Equality multipliers.
        y_in: Inequality multipliers.
        y_box: Box multipliers, one per variable.
        status: Solve outcome.
        primal_residual: Constraint violation (inf norm).
        dual_residual: Stationarity residual (inf norm).
        iterations: ADMM iterations performed.
        polished: Whether the returned point came from the active-set polish.
        objective: Objective value including the constant.
    """

    x: np.ndarray
    y_eq: np.ndarray
    y_in: np.ndarray
    y_box: np.ndarray
    status: QpStatus
    primal_residual: float
    dual_residual: float
    iterations: int = 0
    polished: bool = False
    objective: float = float("nan")
    info: Dict[str, float] = field(default_factory=dict)

    @property
    def is_solved(self) -> bool:
        return self.status is QpStatus.SOLVED

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
            "polished": self.polished,
        }


@dataclass(frozen=True)
class KktResiduals:
    """Infinity-norm KKT residuals of a primal/dual pair."""

    primal: float
    dual: float
    complementarity: float
    dual_sign: float
    multiplier_scale: float = 1.0

    def within(self, tol: QpTolerances) -> bool:
        return (
            self.primal <= tol.primal
            and self.dual <= tol.dual
            and self.dual_sign <= tol.dual
            and self.complementarity <= tol.complementarity * max(1.0, self.multiplier_scale)
        )
