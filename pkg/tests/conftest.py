"""Pytest configuration and fixtures for RHALC tests."""

import pytest
import numpy as np

from cli.checks import central_difference, relative_error
from config.schemas import ControllerConfig, KernelBounds, RunConfig, ScpConfig
from gp_regression.models.gp import KernelParams
from gp_regression.regressor import build_model
from rhalc_controller.models import DEFAULT_KERNEL_A, DEFAULT_KERNEL_P, VehicleModels
from vehicle_sim.dynamics import step_truth
from vehicle_sim.models import ControlInput, VehicleState


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def finite_difference():
    """Central finite-difference derivative helper."""
    return central_difference


@pytest.fixture
def rel_error():
    """Relative error ||a - b|| / max(||a||, ||b||, 1e-10)."""
    return relative_error


@pytest.fixture
def kernel_2d() -> KernelParams:
    """SE-ARD kernel on two inputs."""
    return KernelParams(signal_variance=1.3, lengthscales=(0.8, 1.4), noise_variance=1e-2)


@pytest.fixture
def gp_2d(rng, kernel_2d):
    """GP trained on 15 noisy samples of sin(x0) + 0.5 cos(x1)."""
    X = rng.uniform(-2.0, 2.0, size=(15, 2))
    Y = np.sin(X[:, 0]) + 0.5 * np.cos(X[:, 1]) + 0.05 * rng.normal(size=15)
    return build_model(X, Y, kernel_2d)


@pytest.fixture
def vehicle_models(rng) -> VehicleModels:
    """The three dynamics GPs trained on 30 random truth transitions."""
    X_p, X_a, Y = [], [], []
    for _ in range(30):
        state = VehicleState(0.0, 0.0, float(rng.uniform(-np.pi, np.pi)), float(rng.uniform(0.0, 2.0)))
        control = ControlInput(0.0, float(rng.uniform(-0.7, 0.7)))
        _, obs = step_truth(state, control)
        X_p.append(obs.gp_input_p)
        X_a.append(obs.gp_input_a)
        Y.append((obs.dx, obs.dy, obs.dtheta))
    X_p, X_a, Y = np.array(X_p), np.array(X_a), np.array(Y)
    kernel_p, kernel_a = DEFAULT_KERNEL_P, DEFAULT_KERNEL_A
    return VehicleModels(
        px=build_model(X_p, Y[:, 0], kernel_p),
        py=build_model(X_p, Y[:, 1], kernel_p),
        pa=build_model(X_a, Y[:, 2], kernel_a),
    )


@pytest.fixture
def fast_controller() -> ControllerConfig:
    """Controller with a short horizon for quick closed-loop tests."""
    return ControllerConfig(horizon=3)


@pytest.fixture
def fast_scp() -> ScpConfig:
    """Trust-region settings with a small iteration cap."""
    return ScpConfig(j_max=15)


@pytest.fixture
def small_run_config() -> RunConfig:
    """One short online learning scenario."""
    return RunConfig.from_dict(
        {
            "scenarios": [
                {"kind": "online_al", "name": "al", "initial_points": 8, "collection_steps": 3, "max_steps": 3}
            ],
            "controller": {"horizon": 3},
            "scp": {"j_max": 10},
            "kernel": {"restarts": 1},
            "seeds": [0],
        }
    )


@pytest.fixture
def kernel_bounds() -> KernelBounds:
    """Default hyperparameter box, fitted from the initial guess only."""
    return KernelBounds(restarts=0)
