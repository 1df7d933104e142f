"""Tests for the QP solver and the penalized subproblem builder."""

from unittest.mock import patch

import numpy as np
import pytest
import scipy.sparse as sp

from cli.checks import enumerate_box_qp, random_box_qp
from config.schemas import ControllerConfig, FreeSpaceBounds, QpConfig
from qp_subproblem import (
    QpProblem,
    QpSolution,
    QpStatus,
    QpTolerances,
    SubproblemBuildError,
    VariableLayout,
    build_subproblem,
    kkt_residuals,
    solve_qp,
    zero_step,
)
from rhalc_controller.corridor import ReferenceWindow, box_corridor
from scp_solver.cost import exact_penalty_cost
from scp_solver.rollout import simulate_gp_rollout
from vehicle_sim.models import VehicleState


class TestQpProblem:
    """Test suite for the QP data model."""

    def test_defaults_fill_empty_constraints(self):
        """Test omitted constraint blocks become empty matrices and infinite bounds."""
        problem = QpProblem(P=sp.eye(3), q=np.zeros(3))
        assert problem.num_eq == 0
        assert problem.num_in == 0
        assert np.all(np.isinf(problem.lower))

    def test_rejects_inconsistent_bounds(self):
        """Test lower bounds above upper bounds are rejected."""
        with pytest.raises(ValueError):
            QpProblem(P=sp.eye(2), q=np.zeros(2), lower=np.ones(2), upper=np.zeros(2))

    def test_dump_round_trip(self):
        """Test the JSON dump restores the same problem."""
        problem = QpProblem(
            P=sp.diags([2.0, 1.0]),
            q=np.array([1.0, -1.0]),
            A_in=sp.csc_matrix([[1.0, 1.0]]),
            b_in=np.array([1.0]),
            lower=np.array([-np.inf, 0.0]),
        )
        restored = QpProblem.from_dict(problem.to_dict())
        assert restored.objective(np.array([0.3, 0.4])) == pytest.approx(problem.objective(np.array([0.3, 0.4])))
        np.testing.assert_array_equal(restored.lower, problem.lower)
        assert '"lower": [null, 0.0]' in problem.to_json()


class TestSolveQp:
    """Test suite for the ADMM QP solver."""

    def test_unconstrained(self):
        """Test an unconstrained QP returns -P^-1 q."""
        solution = solve_qp(QpProblem(P=sp.diags([2.0, 2.0]), q=np.array([-2.0, -4.0])))
        assert solution.status is QpStatus.SOLVED
        np.testing.assert_allclose(solution.x, [1.0, 2.0], atol=1e-6)

    def test_clamped_scalar(self):
        """Test (z - 3)^2 on [0, 1] is minimized at the upper bound."""
        problem = QpProblem(P=sp.csc_matrix([[2.0]]), q=np.array([-6.0]), lower=np.zeros(1), upper=np.ones(1), constant=9.0)
        solution = solve_qp(problem)
        assert solution.is_solved
        assert solution.x[0] == pytest.approx(1.0, abs=1e-6)
        assert solution.objective == pytest.approx(4.0, abs=1e-5)
        assert solution.y_box[0] == pytest.approx(4.0, abs=1e-4)

    def test_equality_constrained(self):
        """Test the minimum-norm point on z1 + z2 = 1."""
        problem = QpProblem(P=sp.eye(2, format="csc"), q=np.zeros(2), A_eq=sp.csc_matrix([[1.0, 1.0]]), b_eq=np.array([1.0]))
        solution = solve_qp(problem)
        assert solution.is_solved
        np.testing.assert_allclose(solution.x, [0.5, 0.5], atol=1e-6)
        assert solution.y_eq[0] == pytest.approx(-0.5, abs=1e-5)

    def test_inequality_constrained(self):
        """Test an active inequality with a non-negative multiplier."""
        problem = QpProblem(
            P=sp.eye(2, format="csc"),
            q=np.array([-2.0, -2.0]),
            A_in=sp.csc_matrix([[1.0, 1.0]]),
            b_in=np.array([1.0]),
        )
        solution = solve_qp(problem)
        assert solution.is_solved
        np.testing.assert_allclose(solution.x, [0.5, 0.5], atol=1e-6)
        assert solution.y_in[0] == pytest.approx(1.5, abs=1e-5)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_enumeration_oracle(self, seed):
        """Test random box QPs against exhaustive active-set enumeration."""
        problem = random_box_qp(np.random.default_rng(seed), n=6)
        solution = solve_qp(problem)
        exact = enumerate_box_qp(problem)
        assert solution.is_solved
        assert solution.objective == pytest.approx(problem.objective(exact), abs=1e-5)

    def test_solved_satisfies_kkt(self, rng):
        """Test a solved QP meets the declared residual tolerances."""
        problem = random_box_qp(rng, n=8)
        tol = QpTolerances()
        solution = solve_qp(problem, tol)
        residuals = kkt_residuals(problem, solution)
        assert solution.is_solved
        assert residuals.primal <= tol.primal
        assert residuals.dual <= tol.dual

    def test_infeasible_problem(self):
        """Test contradictory constraints are never reported as solved."""
        problem = QpProblem(
            P=sp.csc_matrix([[1.0]]),
            q=np.zeros(1),
            A_in=sp.csc_matrix([[1.0]]),
            b_in=np.array([-1.0]),
            lower=np.ones(1),
            upper=np.full(1, 2.0),
        )
        solution = solve_qp(problem)
        assert solution.status is not QpStatus.SOLVED

    def test_iteration_cap(self, rng):
        """Test the iteration cap returns max-iter when no polish succeeds."""
        problem = random_box_qp(rng, n=10)
        with patch("qp_subproblem.admm._polish", return_value=None):
            solution = solve_qp(problem, max_iter=1)
        assert solution.status is QpStatus.MAX_ITER
        assert solution.iterations == 1
        assert np.all(np.isfinite(solution.x))

    def test_loose_complementarity_is_not_solved(self):
        """Test a feasible stationary point with a slack multiplier fails the KKT check."""
        problem = QpProblem(P=sp.csc_matrix([[1.0]]), q=np.array([-1.5]), lower=np.zeros(1), upper=np.ones(1))
        interior = QpSolution(
            x=np.array([0.5]), y_eq=np.zeros(0), y_in=np.zeros(0), y_box=np.array([1.0]),
            status=QpStatus.SOLVED, primal_residual=0.0, dual_residual=0.0,
        )
        residuals = kkt_residuals(problem, interior)
        tol = QpTolerances()
        assert residuals.primal == 0.0
        assert residuals.dual == pytest.approx(0.0, abs=1e-15)
        assert residuals.dual_sign == 0.0
        assert residuals.complementarity == pytest.approx(0.5)
        assert not residuals.within(tol)

    def test_large_multipliers_solved(self):
        """Test a bound held by a 1e6 gradient is solved with relative complementarity."""
        problem = QpProblem(P=sp.csc_matrix([[1.0]]), q=np.array([-1e6]), lower=np.zeros(1), upper=np.ones(1))
        tol = QpTolerances()
        solution = solve_qp(problem, tol)
        residuals = kkt_residuals(problem, solution)
        assert solution.is_solved
        assert solution.x[0] == pytest.approx(1.0, abs=1e-6)
        assert residuals.multiplier_scale == pytest.approx(1e6 - 1.0, rel=1e-4)
        assert residuals.complementarity <= tol.complementarity * residuals.multiplier_scale

    def test_tolerances_from_config(self):
        """Test the run configuration sets every QP tolerance."""
        tol = QpTolerances.from_config(QpConfig(complementarity_tol=1e-4, max_iter=50))
        assert tol.complementarity == 1e-4
        assert tol.primal == 1e-6
        assert tol.max_iter == 50


@pytest.fixture
def horizon_setup(vehicle_models):
    """Nominal plan, reference and corridor for a three-step horizon."""
    config = ControllerConfig(horizon=3, gamma=0.0)
    state = VehicleState(0.0, 0.0, 0.0, 1.0)
    controls = np.array([[0.2, 0.1], [0.2, 0.1], [0.0, -0.1]])
    plan = simulate_gp_rollout(vehicle_models, controls, state, config.dt)
    reference = ReferenceWindow(points=np.array([[0.3, 0.05], [0.6, 0.1], [0.9, 0.2]]))
    corridor = box_corridor(FreeSpaceBounds(), 3)
    return config, plan, reference, corridor


class TestVariableLayout:
    """Test suite for the decision-vector layout."""

    def test_block_sizes(self):
        """Test block offsets and total size with and without hinge slacks."""
        hard = VariableLayout(horizon=3, corridor_rows=12)
        elastic = VariableLayout(horizon=3, corridor_rows=12, elastic=True)
        assert hard.size == 6 + 3 + 3 + 9 + 6 + 9
        assert elastic.size == hard.size + 12 + 6
        assert hard.y_index(1, 2) == 12 + 5
        assert hard.pos_index(2, 1) == 21 + 5


class TestBuildSubproblem:
    """Test suite for subproblem assembly."""

    def test_hand_assembled_entries(self, vehicle_models, horizon_setup):
        """Test cost and dynamics entries against hand-computed values."""
        config, plan, reference, corridor = horizon_setup
        sub = build_subproblem(vehicle_models, plan, config, reference, corridor, rho=0.5)
        P = sub.problem.P.toarray()
        layout = sub.layout
        assert P[layout.du_index(0, 0), layout.du_index(0, 0)] == pytest.approx(2.0 * 0.1)
        assert P[layout.pos_index(1, 0), layout.pos_index(1, 0)] == pytest.approx(2.0 * 100.0)
        assert sub.problem.q[layout.du_index(0, 1)] == pytest.approx(2.0 * 0.1 * 0.1)
        assert sub.problem.q[layout.pos_index(2, 1)] == pytest.approx(-2.0 * 100.0 * 0.2)
        np.testing.assert_allclose(sub.problem.q[layout.abs_slack], 1e6)
        np.testing.assert_array_equal(P, P.T)
        assert np.all(sub.problem.lower[layout.abs_slack] == 0.0)

    def test_zero_step_is_exact_cost(self, vehicle_models, horizon_setup):
        """Test the zero perturbation satisfies the equalities and costs the exact penalized value."""
        config, plan, reference, corridor = horizon_setup
        for gamma in (0.0, 10.0):
            cfg = config.model_copy(update={"gamma": gamma})
            sub = build_subproblem(vehicle_models, plan, cfg, reference, corridor, rho=0.3)
            z = zero_step(sub)
            exact = exact_penalty_cost(plan, vehicle_models, cfg, reference, corridor).total
            np.testing.assert_allclose(sub.problem.A_eq @ z, sub.problem.b_eq, atol=1e-12)
            assert np.all(sub.problem.A_in @ z <= sub.problem.b_in + 1e-12)
            assert sub.problem.objective(z) == pytest.approx(exact, rel=1e-9, abs=1e-9)

    def test_zero_radius_keeps_nominal(self, vehicle_models, horizon_setup):
        """Test rho = 0 leaves only the nominal controls and its penalized cost."""
        config, plan, reference, corridor = horizon_setup
        sub = build_subproblem(vehicle_models, plan, config, reference, corridor, rho=0.0)
        solution = solve_qp(sub.problem)
        exact = exact_penalty_cost(plan, vehicle_models, config, reference, corridor).total
        assert solution.is_solved
        np.testing.assert_allclose(sub.candidate_controls(solution.x), plan.controls, atol=1e-6)
        assert solution.objective == pytest.approx(exact, rel=1e-5, abs=1e-3)

    def test_larger_radius_never_worse(self, vehicle_models, horizon_setup):
        """Test the optimal value is non-increasing in the trust radius."""
        config, plan, reference, corridor = horizon_setup
        values = []
        for rho in (0.05, 0.5):
            solution = solve_qp(build_subproblem(vehicle_models, plan, config, reference, corridor, rho=rho).problem)
            assert solution.is_solved
            values.append(solution.objective)
        assert values[1] <= values[0] + 1e-5

    def test_solution_is_kkt_point(self, vehicle_models, horizon_setup):
        """Test the subproblem solution satisfies the KKT conditions."""
        config, plan, reference, corridor = horizon_setup
        sub = build_subproblem(vehicle_models, plan, config, reference, corridor, rho=0.3)
        solution = solve_qp(sub.problem)
        residuals = kkt_residuals(sub.problem, solution)
        assert solution.is_solved
        assert residuals.primal <= 1e-6
        assert residuals.dual <= 1e-6

    def test_trust_region_respected(self, vehicle_models, horizon_setup):
        """Test candidate controls stay within rho of the nominal and inside the input bounds."""
        config, plan, reference, corridor = horizon_setup
        sub = build_subproblem(vehicle_models, plan, config, reference, corridor, rho=0.2)
        solution = solve_qp(sub.problem)
        candidate = sub.candidate_controls(solution.x)
        assert np.max(np.abs(candidate - plan.controls)) <= 0.2 + 1e-6
        assert np.all(candidate[:, 1] <= config.steer_max + 1e-6)

    def test_elastic_mode_adds_hinge_slacks(self, vehicle_models, horizon_setup):
        """Test elastic mode adds one slack per corridor row and velocity row."""
        config, plan, reference, corridor = horizon_setup
        hard = build_subproblem(vehicle_models, plan, config, reference, corridor, rho=0.3)
        elastic = build_subproblem(vehicle_models, plan, config, reference, corridor, rho=0.3, elastic=True)
        assert elastic.layout.size == hard.layout.size + corridor.num_rows + 2 * 3
        assert np.all(elastic.problem.q[elastic.layout.corridor_slack] == config.penalties.tau)

    def test_negative_radius(self, vehicle_models, horizon_setup):
        """Test a negative trust radius is rejected."""
        config, plan, reference, corridor = horizon_setup
        with pytest.raises(SubproblemBuildError):
            build_subproblem(vehicle_models, plan, config, reference, corridor, rho=-0.1)

    def test_reference_length_mismatch(self, vehicle_models, horizon_setup):
        """Test a reference of the wrong length is rejected."""
        config, plan, _, corridor = horizon_setup
        with pytest.raises(SubproblemBuildError):
            build_subproblem(vehicle_models, plan, config, ReferenceWindow(points=np.zeros((2, 2))), corridor, rho=0.1)

    def test_nominal_outside_bounds(self, vehicle_models, horizon_setup):
        """Test a nominal control outside the input bounds is rejected."""
        config, _, reference, corridor = horizon_setup
        plan = simulate_gp_rollout(vehicle_models, np.array([[3.0, 0.0]] * 3), VehicleState(0.0, 0.0, 0.0, 0.0))
        with pytest.raises(SubproblemBuildError):
            build_subproblem(vehicle_models, plan, config, reference, corridor, rho=0.1)
