"""
Assembly of the penalized convex subproblem around a nominal horizon plan.

Decision vector (all blocks ordered by horizon step k = 0..H-1)::

    du     control perturbations [da_k, dalpha_k]
    dtheta heading perturbation of the state entering step k (dtheta_0 = 0)
    dv     speed perturbation of the state entering step k (dv_0 = 0)
    y      GP outputs [dx_k, dy_k, dtheta_k] (absolute values)
    pos    positions p_{k+1} (absolute values)
    abs    one slack per linearized GP equality
    hinge  elastic mode only: one slack per corridor row and velocity row

The position regressor [cos theta, sin theta, v, alpha] is linearized around
the nominal heading, so its perturbation is
[-sin theta* dtheta, cos theta* dtheta, dv, dalpha].
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Tuple
import logging

import numpy as np
import scipy.sparse as sp

from active_learning.entropy import entropy_eval
from gp_regression.regressor import mean_gradient, predict_mean
from qp_subproblem.exceptions import SubproblemBuildError
from qp_subproblem.models import QpProblem

if TYPE_CHECKING:
    from config.schemas import ControllerConfig
    from rhalc_controller.corridor import Corridor, ReferenceWindow
    from rhalc_controller.models import VehicleModels
    from scp_solver.models import HorizonPlan

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariableLayout:
    """Index map of the subproblem decision vector."""

    horizon: int
    corridor_rows: int = 0
    elastic: bool = False

    def _block(self, offset: int, width: int) -> slice:
        return slice(offset, offset + width)

    @property
    def du(self) -> slice:
        return self._block(0, 2 * self.horizon)

    @property
    def dtheta(self) -> slice:
        return self._block(self.du.stop, self.horizon)

    @property
    def dv(self) -> slice:
        return self._block(self.dtheta.stop, self.horizon)

    @property
    def y(self) -> slice:
        return self._block(self.dv.stop, 3 * self.horizon)

    @property
    def pos(self) -> slice:
        return self._block(self.y.stop, 2 * self.horizon)

    @property
    def abs_slack(self) -> slice:
        return self._block(self.pos.stop, 3 * self.horizon)

    @property
    def corridor_slack(self) -> slice:
        return self._block(self.abs_slack.stop, self.corridor_rows if self.elastic else 0)

    @property
    def velocity_slack(self) -> slice:
        return self._block(self.corridor_slack.stop, 2 * self.horizon if self.elastic else 0)

    @property
    def size(self) -> int:
        return self.velocity_slack.stop

    def du_index(self, k: int, channel: int) -> int:
        return self.du.start + 2 * k + channel

    def y_index(self, k: int, output: int) -> int:
        return self.y.start + 3 * k + output

    def pos_index(self, k: int, axis: int) -> int:
        """Index of coordinate ``axis`` of p_{k+1}."""
        return self.pos.start + 2 * k + axis


@dataclass
class Subproblem:
    """
    A built QP together with the data needed to read its solution.

    Attributes:
        problem: The QP.
        layout: Decision-vector index map.
        nominal: Plan the problem was linearized around.
        elastic: Whether corridor and velocity rows carry hinge slacks.
    """

    problem: QpProblem
    layout: VariableLayout
    nominal: "HorizonPlan"
    elastic: bool = False

    def candidate_controls(self, z: np.ndarray) -> np.ndarray:
        """Nominal controls plus the control perturbation of a QP solution, shape (H, 2)."""
        du = np.asarray(z[self.layout.du]).reshape(-1, 2)
        return np.asarray(self.nominal.controls) + du

    def planned_positions(self, z: np.ndarray) -> np.ndarray:
        """Linearized positions p_1..p_H of a QP solution, shape (H, 2)."""
        return np.asarray(z[self.layout.pos]).reshape(-1, 2)


class _Rows:
    """Sparse row accumulator."""

    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self._rows: List[int] = []
        self._cols: List[int] = []
        self._vals: List[float] = []
        self.rhs: List[float] = []

    def add(self, entries: List[Tuple[int, float]], rhs: float) -> None:
        row = len(self.rhs)
        for col, val in entries:
            if val != 0.0:
                self._rows.append(row)
                self._cols.append(col)
                self._vals.append(float(val))
        self.rhs.append(float(rhs))

    def matrix(self) -> sp.csc_matrix:
        return sp.csc_matrix(
            (self._vals, (self._rows, self._cols)), shape=(len(self.rhs), self.num_vars)
        )

    def vector(self) -> np.ndarray:
        return np.asarray(self.rhs, dtype=float)


def _linearization(models: "VehicleModels", nominal: "HorizonPlan") -> Tuple[np.ndarray, np.ndarray]:
    """GP means (H, 3) and mean gradients [g_x (4), g_y (4), g_theta (2)] per step."""
    X_p = np.asarray(nominal.inputs_p)
    X_a = np.asarray(nominal.inputs_a)
    means = np.column_stack(
        [predict_mean(models.px, X_p), predict_mean(models.py, X_p), predict_mean(models.pa, X_a)]
    )
    grads = np.array(
        [
            np.concatenate(
                [mean_gradient(models.px, X_p[k]), mean_gradient(models.py, X_p[k]), mean_gradient(models.pa, X_a[k])]
            )
            for k in range(X_p.shape[0])
        ]
    )
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(grads))):
        raise SubproblemBuildError("GP means or mean gradients are not finite at the nominal plan")
    return means, grads


def _entropy_terms(models: "VehicleModels", nominal: "HorizonPlan") -> Tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Total entropy and the gradients of H_x, H_y (H, 4) and H_theta (H, 2)."""
    X_p = np.asarray(nominal.inputs_p)
    X_a = np.asarray(nominal.inputs_a)
    ex = entropy_eval(models.px, X_p)
    ey = entropy_eval(models.py, X_p)
    ea = entropy_eval(models.pa, X_a)
    total = ex.value + ey.value + ea.value
    grads = (ex.gradient_matrix(4), ey.gradient_matrix(4), ea.gradient_matrix(2))
    if not (np.isfinite(total) and all(np.all(np.isfinite(g)) for g in grads)):
        raise SubproblemBuildError("Entropy or its gradient is not finite at the nominal plan")
    return total, grads[0], grads[1], grads[2]


def build_subproblem(
    models: "VehicleModels",
    nominal: "HorizonPlan",
    config: "ControllerConfig",
    reference: "ReferenceWindow",
    corridor: "Corridor",
    rho: float,
    elastic: bool = False,
) -> Subproblem:
    """
    Linearize the horizon problem around ``nominal`` and assemble the QP.

    Linearized GP equalities are penalized with weight ``lam`` through
    absolute-value slacks. Input bounds and the trust region are variable
    boxes. Corridor and velocity rows are hard, or hinge-penalized with
    weight ``tau`` when ``elastic`` is set. At the zero perturbation the
    elastic objective equals the exact penalized cost of ``nominal``.

    Args:
        models: The three dynamics GPs.
        nominal: Rollout-consistent plan to linearize around.
        config: Weights, bounds, entropy weight and penalty weights.
        reference: Reference positions r_1..r_H.
        corridor: One half-plane set per horizon step.
        rho: Trust radius.
        elastic: Penalize corridor and velocity rows instead of enforcing them.

    Returns:
        Subproblem bundling the QP and its layout.

    Raises:
        SubproblemBuildError: On non-finite linearization data, a negative
            trust radius or inconsistent shapes.
    """
    if not (np.isfinite(rho) and rho >= 0.0):
        raise SubproblemBuildError(f"Trust radius must be finite and non-negative, got {rho}")

    U = np.asarray(nominal.controls, dtype=float)
    H = U.shape[0]
    ref = np.asarray(reference.points, dtype=float)
    if ref.shape != (H, 2) or len(corridor.steps) != H:
        raise SubproblemBuildError(
            f"Reference {ref.shape} and corridor ({len(corridor.steps)} steps) must match H={H}"
        )

    layout = VariableLayout(horizon=H, corridor_rows=corridor.num_rows, elastic=elastic)
    n = layout.size
    dt = config.dt
    tau, lam = config.penalties.tau, config.penalties.lam
    Q = np.asarray(config.q_weights, dtype=float)
    R = np.asarray(config.r_weights, dtype=float)

    means, grads = _linearization(models, nominal)
    headings = np.asarray(nominal.headings, dtype=float)
    speeds = np.asarray(nominal.speeds, dtype=float)
    positions = np.asarray(nominal.positions, dtype=float)

    # Cost
    P_diag = np.zeros(n)
    q = np.zeros(n)
    for k in range(H):
        for i in range(2):
            P_diag[layout.du_index(k, i)] = 2.0 * R[i]
            q[layout.du_index(k, i)] = 2.0 * R[i] * U[k, i]
            P_diag[layout.pos_index(k, i)] = 2.0 * Q[i]
            q[layout.pos_index(k, i)] = -2.0 * Q[i] * ref[k, i]
    q[layout.abs_slack] = lam
    q[layout.corridor_slack] = tau
    q[layout.velocity_slack] = tau
    constant = float(np.sum(ref ** 2 * Q) + np.sum(U ** 2 * R))

    if config.gamma > 0.0:
        total_entropy, g_x, g_y, g_a = _entropy_terms(models, nominal)
        constant -= config.gamma * total_entropy
        for k in range(H):
            s, c = np.sin(headings[k]), np.cos(headings[k])
            g_pos = g_x[k] + g_y[k]
            q[layout.dtheta.start + k] -= config.gamma * (-s * g_pos[0] + c * g_pos[1])
            q[layout.dv.start + k] -= config.gamma * (g_pos[2] + g_a[k, 0])
            q[layout.du_index(k, 1)] -= config.gamma * (g_pos[3] + g_a[k, 1])

    # Equalities
    eq = _Rows(n)
    for k in range(1, H):
        eq.add(
            [(layout.dv.start + k, 1.0)] + [(layout.du_index(j, 0), -dt) for j in range(k)],
            0.0,
        )
        eq.add(
            [(layout.dtheta.start + k, 1.0)] + [(layout.y_index(j, 2), -1.0) for j in range(k)],
            -float(np.sum(means[:k, 2])),
        )
    for k in range(H):
        for axis in range(2):
            entries = [(layout.pos_index(k, axis), 1.0), (layout.y_index(k, axis), -1.0)]
            if k == 0:
                eq.add(entries, positions[0, axis])
            else:
                eq.add(entries + [(layout.pos_index(k - 1, axis), -1.0)], 0.0)

    # Inequalities
    ineq = _Rows(n)
    for k in range(H):
        s, c = np.sin(headings[k]), np.cos(headings[k])
        g = grads[k]
        rows = []
        for output, g_out in ((0, g[0:4]), (1, g[4:8])):
            rows.append(
                (
                    output,
                    [
                        (layout.y_index(k, output), 1.0),
                        (layout.dtheta.start + k, g_out[0] * s - g_out[1] * c),
                        (layout.dv.start + k, -g_out[2]),
                        (layout.du_index(k, 1), -g_out[3]),
                    ],
                )
            )
        g_a = g[8:10]
        rows.append(
            (
                2,
                [
                    (layout.y_index(k, 2), 1.0),
                    (layout.dv.start + k, -g_a[0]),
                    (layout.du_index(k, 1), -g_a[1]),
                ],
            )
        )
        for output, entries in rows:
            slack = layout.abs_slack.start + 3 * k + output
            mu = means[k, output]
            ineq.add(entries + [(slack, -1.0)], mu)
            ineq.add([(col, -val) for col, val in entries] + [(slack, -1.0)], -mu)

    row = 0
    for k, half_planes in enumerate(corridor.steps):
        for normal, offset in zip(half_planes.normals, half_planes.offsets):
            entries = [(layout.pos_index(k, 0), normal[0]), (layout.pos_index(k, 1), normal[1])]
            if elastic:
                entries.append((layout.corridor_slack.start + row, -1.0))
            ineq.add(entries, offset)
            row += 1

    for k in range(H):
        accel_sum = [(layout.du_index(j, 0), dt) for j in range(k + 1)]
        upper_entries = list(accel_sum)
        lower_entries = [(col, -val) for col, val in accel_sum]
        if elastic:
            upper_entries.append((layout.velocity_slack.start + 2 * k, -1.0))
            lower_entries.append((layout.velocity_slack.start + 2 * k + 1, -1.0))
        ineq.add(upper_entries, config.v_max - speeds[k + 1])
        ineq.add(lower_entries, speeds[k + 1] - config.v_min)

    # Boxes: input bounds intersected with the trust region
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    bounds = np.array([[config.a_min, config.a_max], [config.steer_min, config.steer_max]])
    for k in range(H):
        for i in range(2):
            lo = bounds[i, 0] - U[k, i]
            hi = bounds[i, 1] - U[k, i]
            if lo > 1e-9 or hi < -1e-9:
                raise SubproblemBuildError(
                    f"Nominal control {U[k, i]:.6g} at step {k} violates bounds {tuple(bounds[i])}"
                )
            idx = layout.du_index(k, i)
            lower[idx] = min(max(-rho, lo), 0.0)
            upper[idx] = max(min(rho, hi), 0.0)
    for block in (layout.dtheta, layout.dv):
        lower[block] = -rho
        upper[block] = rho
        lower[block.start] = upper[block.start] = 0.0
    for block in (layout.abs_slack, layout.corridor_slack, layout.velocity_slack):
        lower[block] = 0.0

    P = sp.diags(P_diag, format="csc")
    problem = QpProblem(
        P=P,
        q=q,
        A_eq=eq.matrix(),
        b_eq=eq.vector(),
        A_in=ineq.matrix(),
        b_in=ineq.vector(),
        lower=lower,
        upper=upper,
        constant=constant,
    )
    logger.debug(
        f"Built subproblem H={H} rho={rho:.3g} elastic={elastic}: "
        f"{n} vars, {problem.num_eq} eq, {problem.num_in} ineq"
    )
    return Subproblem(problem=problem, layout=layout, nominal=nominal, elastic=elastic)


def zero_step(subproblem: Subproblem) -> np.ndarray:
    """Decision vector of the zero perturbation (GP outputs at their means)."""
    layout = subproblem.layout
    plan = subproblem.nominal
    z = np.zeros(layout.size)
    z[layout.y] = np.asarray(plan.means, dtype=float).reshape(-1)
    z[layout.pos] = np.asarray(plan.positions, dtype=float)[1:].reshape(-1)
    return z

