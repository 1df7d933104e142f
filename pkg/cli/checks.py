"""
Numerical self-checks run by the ``gradcheck`` and ``qpcheck`` commands.

Analytic gradients are compared with central finite differences; the QP
solver is compared with an exhaustive active-set enumeration on random
box-constrained problems.
"""

from dataclasses import asdict, dataclass
from itertools import combinations, product
from typing import Callable, List, Optional
import logging

import numpy as np
import scipy.sparse as sp

from active_learning.entropy import covariance_input_jacobian, entropy, entropy_gradient
from gp_regression.kernels import kernel_input_jacobian, kernel_matrix
from gp_regression.models.gp import GpModel, KernelParams
from gp_regression.regressor import build_model, mean_gradient, predict, predict_mean
from qp_subproblem.admm import solve_qp
from qp_subproblem.models import QpProblem

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
GRADIENT_TOL = 1e-4
OBJECTIVE_TOL = 1e-5


def central_difference(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """
    Central finite-difference derivative of ``f`` at ``x``.

    Returns:
        Array of shape (x.size,) + shape of f(x); row i is df/dx_i.
    """
    x = np.asarray(x, dtype=float)
    rows = []
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        plus = np.asarray(f((x.ravel() + e).reshape(x.shape)), dtype=float)
        minus = np.asarray(f((x.ravel() - e).reshape(x.shape)), dtype=float)
        rows.append((plus - minus) / (2.0 * h))
    return np.array(rows)


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b|| / max(||a||, ||b||, 1e-10)."""
    a, b = np.asarray(a, dtype=float).ravel(), np.asarray(b, dtype=float).ravel()
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-10))


@dataclass
class CheckReport:
    """Worst error of one check over all instances."""

    name: str
    instances: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def to_dict(self) -> dict:
        data = asdict(self)
        data["passed"] = self.passed
        return data


def random_gp_instance(rng: np.random.Generator, n: int = 4, N: int = 30) -> GpModel:
    """GP with random data and hyperparameters in a well-conditioned range."""
    kernel = KernelParams(
        signal_variance=float(rng.uniform(0.5, 2.0)),
        lengthscales=tuple(rng.uniform(0.7, 2.0, size=n)),
        noise_variance=float(rng.uniform(1e-3, 1e-2)),
    )
    X = rng.uniform(-2.0, 2.0, size=(N, n))
    Y = np.sin(X @ rng.normal(size=n)) + 0.1 * rng.normal(size=N)
    return build_model(X, Y, kernel)


def gradient_checks(instances: int = 20, seed: int = 0, H: int = 3, n: int = 4, N: int = 30) -> List[CheckReport]:
    """
    Finite-difference checks of the four analytic derivatives.

    Args:
        instances: Random instances per check.
        seed: Seed of the instances.
        H: Horizon (number of joint query points).
        n: Input dimension.
        N: Training points.

    Returns:
        One report per derivative.
    """
    rng = np.random.default_rng(seed)
    errors = {"mean_gradient": 0.0, "kernel_input_jacobian": 0.0, "covariance_input_jacobian": 0.0, "entropy_gradient": 0.0}

    for _ in range(instances):
        model = random_gp_instance(rng, n, N)
        Xset = rng.uniform(-2.0, 2.0, size=(H, n))
        x = Xset[0]

        fd = central_difference(lambda z: predict_mean(model, z)[0], x)
        errors["mean_gradient"] = max(errors["mean_gradient"], relative_error(mean_gradient(model, x), fd))

        fd = central_difference(lambda z: kernel_matrix(model.kernel, z.reshape(1, -1), model.inputs)[0], x)
        analytic = kernel_input_jacobian(model.kernel, x, model.inputs)
        errors["kernel_input_jacobian"] = max(errors["kernel_input_jacobian"], relative_error(analytic, fd))

        j = int(rng.integers(H * n))

        def covariance_at(value: np.ndarray, j: int = j) -> np.ndarray:
            perturbed = Xset.copy().ravel()
            perturbed[j] = value[0]
            return predict(model, perturbed.reshape(H, n)).covariance

        fd = central_difference(covariance_at, np.array([Xset.ravel()[j]]))[0]
        analytic = covariance_input_jacobian(model, Xset, j)
        errors["covariance_input_jacobian"] = max(errors["covariance_input_jacobian"], relative_error(analytic, fd))

        fd = central_difference(lambda z: entropy(model, z), Xset)
        errors["entropy_gradient"] = max(errors["entropy_gradient"], relative_error(entropy_gradient(model, Xset), fd))

    reports = [CheckReport(name, instances, err, GRADIENT_TOL) for name, err in errors.items()]
    for report in reports:
        logger.info(f"gradcheck {report.name}: max relative error {report.max_error:.2e}")
    return reports


def random_box_qp(rng: np.random.Generator, n: int = 10) -> QpProblem:
    """Strictly convex QP with box [-1, 1]^n: P = M^T M + 0.1 I, q ~ N(0, 5^2)."""
    M = rng.normal(size=(n, n))
    P = M.T @ M + 0.1 * np.eye(n)
    q = rng.normal(0.0, 5.0, size=n)
    return QpProblem(P=sp.csc_matrix(P), q=q, lower=-np.ones(n), upper=np.ones(n))


def enumerate_box_qp(problem: QpProblem, tol: float = 1e-9) -> Optional[np.ndarray]:
    """
    Exact minimizer of a strictly convex box QP by active-set enumeration.

    Patterns are tried in order of increasing active-set size; the first one
    satisfying the KKT conditions is returned.
    """
    P = problem.P.toarray()
    q, lower, upper = problem.q, problem.lower, problem.upper
    n = q.size
    for size in range(n + 1):
        for active in combinations(range(n), size):
            free = np.array([i for i in range(n) if i not in active], dtype=int)
            active_idx = np.array(active, dtype=int)
            for sides in product((0, 1), repeat=size):
                x = np.zeros(n)
                if size:
                    x[active_idx] = np.where(np.array(sides) == 1, upper[active_idx], lower[active_idx])
                if free.size:
                    rhs = -(q[free] + P[np.ix_(free, active_idx)] @ x[active_idx])
                    x[free] = np.linalg.solve(P[np.ix_(free, free)], rhs)
                    if np.any(x[free] < lower[free] - tol) or np.any(x[free] > upper[free] + tol):
                        continue
                grad = P @ x + q
                at_upper = np.array(sides, dtype=bool)
                if size and (np.any(grad[active_idx][~at_upper] < -tol) or np.any(grad[active_idx][at_upper] > tol)):
                    continue
                return x
    return None


def qp_checks(instances: int = 20, seed: int = 0, n: int = 10) -> List[CheckReport]:
    """
    Compare solve_qp with the enumeration oracle on random box QPs.

    Returns:
        Reports for the objective gap and for the solved-status rate
        (its error is the fraction of unsolved instances).
    """
    rng = np.random.default_rng(seed)
    worst_gap = 0.0
    unsolved = 0
    for i in range(instances):
        problem = random_box_qp(rng, n)
        solution = solve_qp(problem)
        exact = enumerate_box_qp(problem)
        if exact is None:
            raise RuntimeError(f"Enumeration found no KKT point for instance {i}")
        gap = abs(solution.objective - problem.objective(exact))
        worst_gap = max(worst_gap, gap)
        if not solution.is_solved:
            unsolved += 1
        logger.debug(f"qpcheck instance {i}: status={solution.status.value}, gap={gap:.2e}")
    reports = [
        CheckReport("objective_gap", instances, worst_gap, OBJECTIVE_TOL),
        CheckReport("unsolved_fraction", instances, unsolved / max(instances, 1), 0.0),
    ]
    for report in reports:
        logger.info(f"qpcheck {report.name}: {report.max_error:.2e}")
    return reports
