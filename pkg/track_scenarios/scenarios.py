"""
The learning and racing experiments.

Offline scenarios collect data in a free-space box (RHALC experiment design
or uniformly random excitation); online scenarios learn while driving the
oval; the racing phase drives the complex track with frozen models.
"""

from dataclasses import dataclass
from typing import Optional
import logging

import numpy as np

from config.schemas import ControllerConfig, KernelBounds, RunConfig, ScenarioKind, ScenarioSpec, VehicleConfig
from rhalc_controller.dataset import models_from_observations
from rhalc_controller.episode import EpisodeSetup, random_control, run_episode
from rhalc_controller.models import EpisodeResult, VehicleModels
from track_scenarios.metrics import MetricsReport, ValidationGrid, compute_metrics, validation_grid
from track_scenarios.track import Track, load_bundled_track
from vehicle_sim.dynamics import step_truth
from vehicle_sim.models import VehicleParams, VehicleState
from vehicle_sim.noise import observe_noisy

logger = logging.getLogger(__name__)

# Keeps the initial-data seed stream apart from the episode seed stream.
INITIAL_DATA_SEED_OFFSET = 10_000


@dataclass
class ScenarioResult:
    """
    Outcome of one scenario run.

    Attributes:
        spec: The scenario.
        seed: Seed of the run.
        models: Models after the scenario.
        metrics: Validation metrics of ``models``.
        episode: Closed-loop episode.
        track: Track driven on (None in free space).
    """

    spec: ScenarioSpec
    seed: int
    models: VehicleModels
    metrics: MetricsReport
    episode: Optional[EpisodeResult] = None
    track: Optional[Track] = None

    @property
    def model_id(self) -> str:
        return f"{self.spec.name}-seed{self.seed}"

    def summary(self) -> dict:
        data = {"scenario": self.spec.name, "kind": self.spec.kind.value, "seed": self.seed, "model": self.model_id}
        if self.episode is not None:
            data.update(self.episode.summary())
        return data


def generate_initial_dataset(
    count: int,
    seed: int,
    controller: Optional[ControllerConfig] = None,
    vehicle: Optional[VehicleConfig] = None,
    kernel: Optional[KernelBounds] = None,
) -> VehicleModels:
    """
    Historical data from a seeded random-excitation drive starting at rest at the origin.

    Args:
        count: Number of observations.
        seed: Seed of the controls and the observation noise.
        controller: Input bounds and sampling time.
        vehicle: Truth geometry and noise.
        kernel: Hyperparameter box.

    Returns:
        Fitted VehicleModels with ``count`` points.
    """
    controller = controller or ControllerConfig()
    vehicle = vehicle or VehicleConfig()
    params = VehicleParams.from_config(vehicle)
    rng = np.random.default_rng(seed + INITIAL_DATA_SEED_OFFSET)

    state = VehicleState(0.0, 0.0, 0.0, 0.0)
    observations = []
    for _ in range(count):
        control = random_control(state, controller, rng)
        state, obs = step_truth(state, control, controller.dt, params)
        observations.append(observe_noisy(obs, vehicle.noise_std, rng))
    return models_from_observations(observations, kernel, fit=count >= 2, seed=seed)


def scenario_controller(spec: ScenarioSpec, base: ControllerConfig) -> ControllerConfig:
    """Controller configuration of a scenario (entropy weight, optional zero tracking)."""
    update = {"gamma": spec.gamma}
    if spec.zero_tracking:
        update.update({"q_weights": (0.0, 0.0), "r_weights": (0.0, 0.0)})
    return base.model_copy(update=update)


def _start_on_track(track: Track, speed: float) -> VehicleState:
    start = track.point_at(0.0)
    return VehicleState(float(start[0]), float(start[1]), track.heading_at(0.0), speed)


def run_scenario(
    spec: ScenarioSpec,
    seed: int,
    run_config: Optional[RunConfig] = None,
    models: Optional[VehicleModels] = None,
    grid: Optional[ValidationGrid] = None,
) -> ScenarioResult:
    """
    Run one scenario for one seed.

    Args:
        spec: Scenario definition.
        seed: Seed of the initial data, noise and random policy.
        run_config: Shared controller, solver, kernel and vehicle settings.
        models: Models for the racing phase.
        grid: Validation grid (built with default ranges when omitted).

    Returns:
        ScenarioResult with final models, metrics and the episode.
    """
    run_config = run_config or RunConfig()
    controller = scenario_controller(spec, run_config.controller)
    grid = grid or validation_grid(dt=controller.dt, params=VehicleParams.from_config(run_config.vehicle))

    if spec.kind is ScenarioKind.RACING_PHASE:
        if models is None:
            raise ValueError(f"Scenario {spec.name} needs models")
        initial_models = models
        learning_steps = 0
    else:
        initial_models = generate_initial_dataset(
            spec.initial_points, seed, controller, run_config.vehicle, run_config.kernel
        )
        learning_steps = spec.collection_steps

    track = None
    if spec.kind.is_offline:
        initial_state = VehicleState(0.0, 0.0, 0.0, spec.initial_speed)
    else:
        track = load_bundled_track(spec.track_id)
        initial_state = _start_on_track(track, spec.initial_speed)

    setup = EpisodeSetup(
        models=initial_models,
        controller=controller,
        initial_state=initial_state,
        max_steps=spec.step_budget,
        learning_steps=learning_steps,
        track=track,
        free_space=spec.free_space,
        policy="random" if spec.kind is ScenarioKind.RANDOMIZED_EXPERIMENT else "rhalc",
        stop_at_lap=spec.kind is ScenarioKind.RACING_PHASE,
        scp=run_config.scp,
        vehicle=run_config.vehicle,
        kernel=run_config.kernel,
    )
    logger.info(f"Running scenario {spec.name} ({spec.kind.value}) with seed {seed}")
    episode = run_episode(setup, seed)

    result = ScenarioResult(spec=spec, seed=seed, models=episode.models, metrics=None, episode=episode, track=track)
    result.metrics = compute_metrics(episode.models, grid, model_id=result.model_id)
    logger.info(
        f"Scenario {spec.name} seed {seed}: N={episode.models.num_points}, "
        f"RMSE dx={result.metrics.rmse['dx']:.4f} dy={result.metrics.rmse['dy']:.4f} "
        f"dtheta={result.metrics.rmse['dtheta']:.4f}"
    )
    return result
