"""
ADMM operator-splitting QP solver.

Solves the QP of ``QpProblem`` in the two-sided form l <= A z <= u with the
relaxed ADMM iteration

    (P + sigma I) x~ + A^T nu = sigma x - q,   A x~ - nu / rho = z - y / rho
    z~ = z + (nu - y) / rho
    x  <- alpha x~ + (1 - alpha) x
    z  <- Proj_[l,u](alpha z~ + (1 - alpha) z + y / rho)
    y  <- y + rho (alpha z~ + (1 - alpha) z - z)

on a Ruiz-equilibrated copy of the data. The step parameter rho adapts to the
ratio of primal and dual residuals, equality rows use a stiffer rho, and every
check interval the iterate is polished by solving the reduced KKT system on
the guessed active set.
"""

from dataclasses import dataclass
from typing import Optional, Tuple
import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from qp_subproblem.models import (
    KktResiduals,
    QpProblem,
    QpSolution,
    QpStatus,
    QpTolerances,
)

logger = logging.getLogger(__name__)

SIGMA = 1e-6
ALPHA = 1.6
RHO_INIT = 0.1
RHO_MIN = 1e-6
RHO_MAX = 1e6
EQ_RHO_SCALE = 1e3
RHO_ADAPT_FACTOR = 5.0
CHECK_EVERY = 25
RUIZ_ITERS = 10
SCALING_MIN = 1e-4
SCALING_MAX = 1e4
POLISH_DELTA = 1e-7
POLISH_REFINE_ITERS = 10
EPS_PRIMAL_INFEASIBLE = 1e-5


def _inf_norm(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if values.size else 0.0


def kkt_residuals(problem: QpProblem, solution: QpSolution) -> KktResiduals:
    """
    KKT residuals of a primal/dual pair against the unscaled problem.

    Args:
        problem: The QP.
        solution: Primal vector and multipliers.

    Returns:
        KktResiduals with constraint violation, stationarity, complementarity
        and multiplier-sign violation (all infinity norms), plus the largest
        multiplier magnitude.
    """
    x = solution.x
    eq_res = problem.A_eq @ x - problem.b_eq
    in_slack = problem.A_in @ x - problem.b_in
    box_violation = np.maximum(problem.lower - x, 0.0) + np.maximum(x - problem.upper, 0.0)
    primal = max(_inf_norm(eq_res), _inf_norm(np.maximum(in_slack, 0.0)), _inf_norm(box_violation))

    stationarity = (
        problem.P @ x
        + problem.q
        + problem.A_eq.T @ solution.y_eq
        + problem.A_in.T @ solution.y_in
        + solution.y_box
    )
    dual = _inf_norm(stationarity)

    y_up = np.maximum(solution.y_box, 0.0)
    y_low = np.minimum(solution.y_box, 0.0)
    finite_up = np.isfinite(problem.upper)
    finite_low = np.isfinite(problem.lower)
    dual_sign = max(
        _inf_norm(np.minimum(solution.y_in, 0.0)),
        _inf_norm(y_up[~finite_up]),
        _inf_norm(y_low[~finite_low]),
    )
    complementarity = max(
        _inf_norm(solution.y_in * in_slack),
        _inf_norm(y_up[finite_up] * (problem.upper[finite_up] - x[finite_up])),
        _inf_norm(y_low[finite_low] * (x[finite_low] - problem.lower[finite_low])),
    )
    multiplier_scale = max(_inf_norm(solution.y_eq), _inf_norm(solution.y_in), _inf_norm(solution.y_box))
    return KktResiduals(
        primal=primal,
        dual=dual,
        complementarity=complementarity,
        dual_sign=dual_sign,
        multiplier_scale=multiplier_scale,
    )


@dataclass
class _Scaled:
    """Equilibrated data: P_s = c D P D, q_s = c D q, A_s = E A D."""

    P: sp.csc_matrix
    q: np.ndarray
    A: sp.csc_matrix
    l: np.ndarray
    u: np.ndarray
    D: np.ndarray
    E: np.ndarray
    c: float


def _limit(norms: np.ndarray) -> np.ndarray:
    norms = np.where(norms < SCALING_MIN, 1.0, norms)
    return np.minimum(norms, SCALING_MAX)


def _column_inf_norms(matrix: sp.spmatrix) -> np.ndarray:
    if matrix.shape[0] == 0:
        return np.zeros(matrix.shape[1])
    return np.asarray(abs(matrix).max(axis=0).todense()).ravel()


def _equilibrate(P: sp.csc_matrix, q: np.ndarray, A: sp.csc_matrix, l: np.ndarray, u: np.ndarray) -> _Scaled:
    n, m = P.shape[0], A.shape[0]
    D, E = np.ones(n), np.ones(m)
    Ps, As = P.copy(), A.copy()
    for _ in range(RUIZ_ITERS):
        d = 1.0 / np.sqrt(_limit(np.maximum(_column_inf_norms(Ps), _column_inf_norms(As))))
        Dm = sp.diags(d)
        Ps = (Dm @ Ps @ Dm).tocsc()
        if m:
            e = 1.0 / np.sqrt(_limit(_column_inf_norms(As.T.tocsc())))
            As = (sp.diags(e) @ As @ Dm).tocsc()
        else:
            e = np.ones(0)
        D *= d
        E *= e

    qs = D * q
    cost_norm = max(float(np.mean(_column_inf_norms(Ps))) if n else 0.0, _inf_norm(qs))
    c = 1.0 / float(_limit(np.array([cost_norm]))[0])
    return _Scaled(P=(c * Ps).tocsc(), q=c * qs, A=As, l=E * l, u=E * u, D=D, E=E, c=c)


def _saddle(top_left: sp.spmatrix, A: sp.spmatrix, bottom_right: Optional[sp.spmatrix]) -> sp.csc_matrix:
    """Assemble [[top_left, A^T], [A, bottom_right]]; bottom_right None means zeros."""
    k = A.shape[0]
    if k == 0:
        return sp.csc_matrix(top_left)
    if bottom_right is None:
        bottom_right = sp.csc_matrix((k, k))
    return sp.bmat([[top_left, A.T], [A, bottom_right]], format="csc")


def _kkt_factor(data: _Scaled, rho: np.ndarray):
    n = data.P.shape[0]
    K = _saddle(data.P + SIGMA * sp.eye(n), data.A, -sp.diags(1.0 / rho) if rho.size else None)
    return splu(K)


def _rho_vector(rho: float, l: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.where(l == u, EQ_RHO_SCALE * rho, rho)


def _split_duals(problem: QpProblem, y_rows: np.ndarray, kept: np.ndarray, box_index: np.ndarray):
    """Map multipliers of the kept stacked rows back to (y_eq, y_in, y_box)."""
    m_eq, m_in = problem.num_eq, problem.num_in
    full = np.zeros(kept.size)
    full[kept] = y_rows
    y_box = np.zeros(problem.num_vars)
    y_box[box_index] = full[m_eq + m_in:]
    return full[:m_eq].copy(), full[m_eq:m_eq + m_in].copy(), y_box


def _polish(
    data: _Scaled, x: np.ndarray, z: np.ndarray, y: np.ndarray
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Solve the reduced KKT system on the guessed active set (scaled space)."""
    n = data.P.shape[0]
    eq = data.l == data.u
    low = (z - data.l < -y) & ~eq
    upp = (data.u - z < y) & ~eq
    active = eq | low | upp
    A_red = data.A[np.flatnonzero(active)]
    rhs_bound = np.where(upp, data.u, data.l)[active]
    k = A_red.shape[0]

    K_true = _saddle(data.P, A_red, None)
    K_reg = _saddle(data.P + POLISH_DELTA * sp.eye(n), A_red, -POLISH_DELTA * sp.eye(k) if k else None)
    rhs = np.concatenate([-data.q, rhs_bound])
    try:
        factor = splu(K_reg)
    except RuntimeError as e:
        logger.debug(f"Polish factorization failed: {e}")
        return None
    sol = factor.solve(rhs)
    for _ in range(POLISH_REFINE_ITERS):
        sol = sol + factor.solve(rhs - K_true @ sol)
    if not np.all(np.isfinite(sol)):
        return None

    y_red = sol[n:]
    # Multipliers of guessed lower-active rows must be <= 0, upper-active >= 0.
    y_pol = np.zeros_like(y)
    y_pol[active] = y_red
    if np.any(y_pol[low] > 0.0) or np.any(y_pol[upp] < 0.0):
        return None
    return sol[:n], y_pol


def solve_qp(
    problem: QpProblem,
    tol: Optional[QpTolerances] = None,
    max_iter: Optional[int] = None,
) -> QpSolution:
    """
    Solve a convex QP to KKT tolerance.

    Args:
        problem: QP with PSD cost.
        tol: Residual tolerances; defaults to 1e-6 / 1e-6 / 4000 iterations.
        max_iter: Overrides ``tol.max_iter``.

    Returns:
        QpSolution. ``status`` is ``solved`` only when the unscaled primal,
        dual and complementarity residuals are within tolerance; ``max-iter``
        returns the best iterate seen; ``infeasible-numerics`` flags a primal
        infeasibility certificate or a numerical breakdown.
    """
    tol = tol or QpTolerances()
    max_iter = max_iter if max_iter is not None else tol.max_iter

    A_full, l_full, u_full, box_index = problem.stacked()
    kept = np.isfinite(l_full) | np.isfinite(u_full)
    A = A_full[np.flatnonzero(kept)].tocsc()
    l, u = l_full[kept], u_full[kept]
    n, m = problem.num_vars, A.shape[0]

    data = _equilibrate(problem.P, problem.q, A, l, u)
    rho = RHO_INIT
    rho_vec = _rho_vector(rho, data.l, data.u)
    try:
        factor = _kkt_factor(data, rho_vec)
    except RuntimeError as e:
        logger.warning(f"KKT factorization failed: {e}")
        return _finish(problem, np.zeros(n), np.zeros(m), kept, box_index, QpStatus.INFEASIBLE_NUMERICS, 0, False, tol)

    x, z, y = np.zeros(n), np.zeros(m), np.zeros(m)
    best = None
    best_score = np.inf
    iteration = 0

    for iteration in range(1, max_iter + 1):
        rhs = np.concatenate([SIGMA * x - data.q, z - y / rho_vec])
        sol = factor.solve(rhs)
        x_tilde, nu = sol[:n], sol[n:]
        z_tilde = z + (nu - y) / rho_vec

        x = ALPHA * x_tilde + (1.0 - ALPHA) * x
        z_relaxed = ALPHA * z_tilde + (1.0 - ALPHA) * z
        z_new = np.clip(z_relaxed + y / rho_vec, data.l, data.u)
        y_new = y + rho_vec * (z_relaxed - z_new)
        delta_y = y_new - y
        z, y = z_new, y_new

        if iteration % CHECK_EVERY and iteration != max_iter:
            continue

        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            logger.warning(f"ADMM iterate became non-finite at iteration {iteration}")
            return _finish(problem, np.zeros(n), np.zeros(m), kept, box_index, QpStatus.INFEASIBLE_NUMERICS, iteration, False, tol)

        if _primal_infeasible(data, delta_y):
            logger.debug(f"Primal infeasibility certificate at iteration {iteration}")
            x_u, y_u = _unscale(data, x, y)
            return _finish(problem, x_u, y_u, kept, box_index, QpStatus.INFEASIBLE_NUMERICS, iteration, False, tol)

        x_u, y_u = _unscale(data, x, y)
        z_u = z / data.E
        pri = _inf_norm(A @ x_u - z_u)
        dua = _inf_norm(problem.P @ x_u + problem.q + A.T @ y_u)
        score = max(pri / tol.primal, dua / tol.dual)
        if score < best_score:
            best, best_score = (x_u, y_u), score

        polished = _polish(data, x, z, y)
        if polished is not None:
            x_p, y_p = _unscale(data, *polished)
            candidate = _finish(problem, x_p, y_p, kept, box_index, QpStatus.SOLVED, iteration, True, tol)
            if candidate.is_solved:
                logger.debug(f"QP polished at iteration {iteration} (n={n}, m={m})")
                return candidate

        if pri <= tol.primal and dua <= tol.dual:
            candidate = _finish(problem, x_u, y_u, kept, box_index, QpStatus.SOLVED, iteration, False, tol)
            if candidate.is_solved:
                return candidate

        new_rho = _adapted_rho(data, rho, x, z, y)
        if new_rho > RHO_ADAPT_FACTOR * rho or new_rho < rho / RHO_ADAPT_FACTOR:
            rho = new_rho
            rho_vec = _rho_vector(rho, data.l, data.u)
            factor = _kkt_factor(data, rho_vec)

    logger.debug(f"ADMM reached {max_iter} iterations (best score {best_score:.2e})")
    x_b, y_b = best if best is not None else _unscale(data, x, y)
    return _finish(problem, x_b, y_b, kept, box_index, QpStatus.MAX_ITER, iteration, False, tol)


def _unscale(data: _Scaled, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return data.D * x, data.E * y / data.c


def _adapted_rho(data: _Scaled, rho: float, x: np.ndarray, z: np.ndarray, y: np.ndarray) -> float:
    Ax = data.A @ x
    Px = data.P @ x
    Aty = data.A.T @ y
    pri = _inf_norm(Ax - z) / (max(_inf_norm(Ax), _inf_norm(z)) + 1e-12)
    dua = _inf_norm(Px + data.q + Aty) / (
        max(_inf_norm(Px), _inf_norm(Aty), _inf_norm(data.q)) + 1e-12
    )
    new_rho = rho * np.sqrt(pri / (dua + 1e-12))
    return float(np.clip(new_rho, RHO_MIN, RHO_MAX))


def _primal_infeasible(data: _Scaled, delta_y: np.ndarray) -> bool:
    norm = _inf_norm(delta_y)
    if norm <= EPS_PRIMAL_INFEASIBLE:
        return False
    dy = delta_y / norm
    pos, neg = dy > 0, dy < 0
    if np.any(~np.isfinite(data.u[pos])) or np.any(~np.isfinite(data.l[neg])):
        return False
    support = data.u[pos] @ dy[pos] + data.l[neg] @ dy[neg]
    if support >= -EPS_PRIMAL_INFEASIBLE:
        return False
    return _inf_norm((data.A.T @ dy) / data.D) < EPS_PRIMAL_INFEASIBLE


def _finish(
    problem: QpProblem,
    x: np.ndarray,
    y_rows: np.ndarray,
    kept: np.ndarray,
    box_index: np.ndarray,
    status: QpStatus,
    iterations: int,
    polished: bool,
    tol: QpTolerances,
) -> QpSolution:
    y_eq, y_in, y_box = _split_duals(problem, y_rows, kept, box_index)
    solution = QpSolution(
        x=x, y_eq=y_eq, y_in=y_in, y_box=y_box, status=status,
        primal_residual=np.inf, dual_residual=np.inf,
        iterations=iterations, polished=polished,
    )
    residuals = kkt_residuals(problem, solution)
    solution.primal_residual = residuals.primal
    solution.dual_residual = residuals.dual
    solution.objective = problem.objective(x)
    solution.info = {"complementarity": residuals.complementarity, "dual_sign": residuals.dual_sign}
    if status is QpStatus.SOLVED and not residuals.within(tol):
        solution.status = QpStatus.MAX_ITER
    return solution
