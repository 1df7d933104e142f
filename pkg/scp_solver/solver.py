"""
Trust-region successive convex programming.

The loop is generic over any problem that can evaluate its exact penalized
cost and solve a convexified model of it inside a trust region.
"""

from typing import Optional, Protocol
import logging
import time

import numpy as np

from config.schemas import ScpConfig
from scp_solver.exceptions import SolverStalledError
from scp_solver.models import ConvexStep, IterationRecord, ScpResult, ScpState

logger = logging.getLogger(__name__)

NAN = float("nan")


class ConvexifiableProblem(Protocol):
    """A problem the trust-region loop can work on."""

    def evaluate(self, iterate: np.ndarray) -> float:
        """Exact penalized cost; may raise ArithmeticError."""
        ...

    def solve_subproblem(self, iterate: np.ndarray, rho: float) -> Optional[ConvexStep]:
        """Minimize the convex model around ``iterate``; None when it could not be solved."""
        ...


class SequentialConvexSolver:
    """
    Trust-region loop with ratio test.

    Each pass solves the convex model, compares the predicted decrease
    delta~ = phi - model_cost with the actual decrease delta, accepts the
    candidate iff delta / delta~ >= r0 and updates the trust radius:
    shrink by beta_fail when the ratio is below r1, keep below r2, grow
    by beta_succ otherwise.
    """

    def __init__(self, config: Optional[ScpConfig] = None):
        self.config = config or ScpConfig()

    def _shrink(self, state: ScpState) -> None:
        state.rho *= self.config.beta_fail
        state.fail_count += 1

    def _grow(self, state: ScpState) -> None:
        state.rho *= self.config.beta_succ
        state.success_count += 1

    def solve(self, problem: ConvexifiableProblem, initial: np.ndarray) -> ScpResult:
        """
        Run the loop from ``initial``.

        Args:
            problem: Problem to minimize.
            initial: Starting iterate (warm start).

        Returns:
            ScpResult with the last accepted iterate.

        Raises:
            SolverStalledError: If the starting cost cannot be evaluated or no
                subproblem was solved.
        """
        cfg = self.config
        started = time.perf_counter()
        iterate = np.array(initial, dtype=float)

        try:
            phi = float(problem.evaluate(iterate))
        except ArithmeticError as e:
            raise SolverStalledError(f"Cost of the warm start cannot be evaluated: {e}", iterate) from e
        if not np.isfinite(phi):
            raise SolverStalledError("Cost of the warm start is not finite", iterate)

        state = ScpState(rho=cfg.rho0, phi=phi)
        any_solved = False

        for j in range(1, cfg.j_max + 1):
            state.iteration = j
            rho = state.rho
            step = problem.solve_subproblem(iterate, rho)

            if step is None:
                state.qp_failures += 1
                self._shrink(state)
                state.history.append(IterationRecord(j, rho, NAN, NAN, NAN, False, "failed", phi))
                logger.debug(f"SCP iteration {j}: subproblem failed, rho -> {state.rho:.3g}")
            else:
                any_solved = True
                delta_tilde = phi - step.model_cost
                if abs(delta_tilde) <= cfg.epsilon:
                    state.history.append(IterationRecord(j, rho, NAN, delta_tilde, NAN, False, step.status, phi))
                    state.converged = True
                    state.termination = "converged"
                    break
                if delta_tilde < 0.0:
                    self._shrink(state)
                    state.history.append(IterationRecord(j, rho, NAN, delta_tilde, NAN, False, step.status, phi))
                    logger.debug(f"SCP iteration {j}: predicted increase {delta_tilde:.3e}, rejected")
                else:
                    accepted, delta, ratio, phi = self._ratio_test(problem, step, state, phi, delta_tilde)
                    if accepted:
                        iterate = np.array(step.candidate, dtype=float)
                    state.history.append(IterationRecord(j, rho, delta, delta_tilde, ratio, accepted, step.status, phi))
                    logger.debug(
                        f"SCP iteration {j}: ratio {ratio:.3g}, accepted={accepted}, rho -> {state.rho:.3g}"
                    )
        else:
            state.termination = "max-iterations"

        state.phi = phi
        state.wall_time = time.perf_counter() - started
        if not any_solved:
            raise SolverStalledError(
                f"No subproblem solved in {state.iteration} iterations", np.array(initial, dtype=float), state
            )
        logger.debug(
            f"SCP finished ({state.termination}) after {state.iteration} iterations, "
            f"{state.accepted_count} accepted, phi={phi:.6g}"
        )
        return ScpResult(iterate=iterate, state=state)

    def _ratio_test(self, problem: ConvexifiableProblem, step: ConvexStep, state: ScpState, phi: float, delta_tilde: float):
        cfg = self.config
        try:
            phi_new = float(problem.evaluate(step.candidate))
        except ArithmeticError as e:
            logger.debug(f"Candidate cost evaluation failed: {e}")
            phi_new = NAN

        if not np.isfinite(phi_new):
            self._shrink(state)
            return False, NAN, NAN, phi

        delta = phi - phi_new
        ratio = delta / delta_tilde
        accepted = ratio >= cfg.r0
        if ratio < cfg.r1:
            self._shrink(state)
        elif ratio >= cfg.r2:
            self._grow(state)
        if accepted:
            state.accepted_count += 1
            return True, delta, ratio, phi_new
        return False, delta, ratio, phi
