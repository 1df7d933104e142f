"""Exact penalized cost of a horizon plan."""

from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING

import numpy as np

from active_learning.entropy import entropy
from scp_solver.models import HorizonPlan

if TYPE_CHECKING:
    from config.schemas import ControllerConfig
    from rhalc_controller.corridor import Corridor, ReferenceWindow
    from rhalc_controller.models import VehicleModels


@dataclass(frozen=True)
class CostBreakdown:
    """
    Terms of the penalized cost.

    Attributes:
        tracking: sum_k (p_{k+1} - r_{k+1})^T Q (p_{k+1} - r_{k+1}).
        control: sum_k u_k^T R u_k.
        entropy: H_x + H_y + H_theta (0 when gamma = 0).
        gamma: Entropy weight.
        corridor_penalty: tau * sum of corridor violations.
        velocity_penalty: tau * sum of speed-bound violations.
    """

    tracking: float
    control: float
    entropy: float
    gamma: float
    corridor_penalty: float
    velocity_penalty: float

    @property
    def total(self) -> float:
        return (
            self.tracking
            + self.control
            - self.gamma * self.entropy
            + self.corridor_penalty
            + self.velocity_penalty
        )

    def to_dict(self) -> dict:
        data = asdict(self)
        data["total"] = self.total
        return data


def exact_penalty_cost(
    plan: HorizonPlan,
    models: "VehicleModels",
    config: "ControllerConfig",
    reference: "ReferenceWindow",
    corridor: "Corridor",
) -> CostBreakdown:
    """
    Evaluate the penalized objective on a GP rollout, without linearization.

    The GP equalities hold exactly on a rollout, so their penalty is zero.

    Raises:
        DegenerateEntropyError: If a horizon covariance is degenerate.
    """
    Q = np.asarray(config.q_weights, dtype=float)
    R = np.asarray(config.r_weights, dtype=float)
    tau = config.penalties.tau

    error = plan.positions[1:] - np.asarray(reference.points, dtype=float)
    tracking = float(np.sum(error ** 2 * Q))
    control = float(np.sum(plan.controls ** 2 * R))

    total_entropy = 0.0
    if config.gamma > 0.0:
        total_entropy = (
            entropy(models.px, plan.inputs_p)
            + entropy(models.py, plan.inputs_p)
            + entropy(models.pa, plan.inputs_a)
        )

    corridor_violation = np.maximum(corridor.row_residuals(plan.positions[1:]), 0.0)
    speeds = plan.speeds[1:]
    velocity_violation = np.maximum(speeds - config.v_max, 0.0) + np.maximum(config.v_min - speeds, 0.0)

    return CostBreakdown(
        tracking=tracking,
        control=control,
        entropy=float(total_entropy),
        gamma=config.gamma,
        corridor_penalty=tau * float(np.sum(corridor_violation)),
        velocity_penalty=tau * float(np.sum(velocity_violation)),
    )
