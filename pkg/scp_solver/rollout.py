"""Chaining the three GP means through the discrete vehicle model."""

from typing import TYPE_CHECKING
import logging

import numpy as np

from gp_regression.regressor import predict_mean
from scp_solver.models import HorizonPlan
from vehicle_sim.models import VehicleState

if TYPE_CHECKING:
    from rhalc_controller.models import VehicleModels

logger = logging.getLogger(__name__)


def simulate_gp_rollout(
    models: "VehicleModels",
    controls: np.ndarray,
    initial_state: VehicleState,
    dt: float = 0.2,
) -> HorizonPlan:
    """
    Roll the GP means forward over the horizon.

    p_{k+1} = p_k + [mu_x, mu_y](x_p,k),  theta_{k+1} = theta_k + mu_theta(x_a,k),
    v_{k+1} = v_k + dt a_k.

    Args:
        models: The three dynamics GPs.
        controls: [a_k, alpha_k] for k = 0..H-1, shape (H, 2).
        initial_state: State at the start of the horizon.
        dt: Sampling time (s).

    Returns:
        Rollout-consistent HorizonPlan.
    """
    U = np.asarray(controls, dtype=float).reshape(-1, 2)
    H = U.shape[0]
    if H < 1:
        raise ValueError("Horizon must contain at least one control")

    positions = np.zeros((H + 1, 2))
    headings = np.zeros(H + 1)
    speeds = np.zeros(H + 1)
    means = np.zeros((H, 3))
    inputs_p = np.zeros((H, 4))
    inputs_a = np.zeros((H, 2))
    positions[0] = initial_state.position
    headings[0] = initial_state.theta
    speeds[0] = initial_state.v

    for k in range(H):
        inputs_p[k] = [np.cos(headings[k]), np.sin(headings[k]), speeds[k], U[k, 1]]
        inputs_a[k] = [speeds[k], U[k, 1]]
        x_p = inputs_p[k:k + 1]
        means[k] = [
            predict_mean(models.px, x_p)[0],
            predict_mean(models.py, x_p)[0],
            predict_mean(models.pa, inputs_a[k:k + 1])[0],
        ]
        positions[k + 1] = positions[k] + means[k, :2]
        headings[k + 1] = headings[k] + means[k, 2]
        speeds[k + 1] = speeds[k] + dt * U[k, 0]

    return HorizonPlan(
        initial_state=initial_state,
        controls=U.copy(),
        means=means,
        positions=positions,
        headings=headings,
        speeds=speeds,
        inputs_p=inputs_p,
        inputs_a=inputs_a,
    )
