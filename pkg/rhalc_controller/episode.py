"""
Closed-loop episodes: plan, apply the first control to the truth
simulator, observe with noise and grow the dataset while learning.
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional
import logging
import math

import numpy as np

from config.schemas import ControllerConfig, FreeSpaceBounds, KernelBounds, ScpConfig, VehicleConfig
from rhalc_controller.controller import RhalcController
from rhalc_controller.corridor import box_corridor, build_corridor, track_reference
from rhalc_controller.dataset import update_dataset
from rhalc_controller.models import EpisodeResult, StepDiagnostics, VehicleModels
from vehicle_sim.dynamics import step_truth
from vehicle_sim.models import ControlInput, VehicleParams, VehicleState
from vehicle_sim.noise import observe_noisy

if TYPE_CHECKING:
    from track_scenarios.track import Track

logger = logging.getLogger(__name__)

POLICIES = ("rhalc", "random")

# Open tracks count as driven once the projection is this close to the end (m).
FINISH_TOLERANCE = 0.05


@dataclass
class EpisodeSetup:
    """
    Everything an episode needs.

    Attributes:
        models: Models at the start of the episode.
        controller: Controller configuration, including the learning-phase gamma.
        initial_state: Truth state at t = 0.
        max_steps: Step budget.
        learning_steps: Number of leading steps whose observations are added
            to the models; afterwards learning is frozen and gamma is 0.
        track: Track to drive on (None in free space).
        free_space: Experiment box (free space only).
        policy: ``rhalc`` or ``random`` (uniform bounded controls).
        stop_at_lap: End the episode when a lap is completed.
        scp: Trust-region parameters.
        vehicle: Truth geometry and observation noise.
        kernel: Hyperparameter box for refits.
    """

    models: VehicleModels
    controller: ControllerConfig
    initial_state: VehicleState
    max_steps: int
    learning_steps: int = 0
    track: Optional["Track"] = None
    free_space: Optional[FreeSpaceBounds] = None
    policy: str = "rhalc"
    stop_at_lap: bool = False
    scp: ScpConfig = field(default_factory=ScpConfig)
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    kernel: KernelBounds = field(default_factory=KernelBounds)

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"Unknown policy {self.policy!r}, expected one of {POLICIES}")
        if self.track is None and self.free_space is None:
            raise ValueError("An episode needs a track or free-space bounds")


def random_control(state: VehicleState, config: ControllerConfig, rng: np.random.Generator) -> ControlInput:
    """Uniform control inside the input bounds whose next speed stays in [v_min, v_max]."""
    lo = max(config.a_min, (config.v_min - state.v) / config.dt)
    hi = min(config.a_max, (config.v_max - state.v) / config.dt)
    if hi < lo:
        lo = hi = min(max(0.0, config.a_min), config.a_max)
    accel = float(rng.uniform(lo, hi))
    steer = float(rng.uniform(config.steer_min, config.steer_max))
    return ControlInput(accel=accel, steer=steer)


def _violated(setup: EpisodeSetup, state: VehicleState, next_state: VehicleState, s_hint: Optional[float]) -> bool:
    if setup.track is None:
        corridor = box_corridor(setup.free_space, 1)
    else:
        cfg = setup.controller
        reference = track_reference(setup.track, state.position, 1, cfg.target_speed * cfg.dt, s_hint=s_hint)
        corridor = build_corridor(setup.track, reference, setup.track.half_width)
    return not corridor.steps[0].contains(next_state.position)


def run_episode(setup: EpisodeSetup, seed: int = 0) -> EpisodeResult:
    """
    Run one closed-loop episode.

    The result is a deterministic function of (setup, seed) apart from the
    recorded solve times.

    Args:
        setup: Episode definition.
        seed: Seed of the observation noise and of the random policy.

    Returns:
        EpisodeResult with the visited states, applied controls and final models.
    """
    noise_seq, policy_seq = np.random.SeedSequence(seed).spawn(2)
    noise_rng = np.random.default_rng(noise_seq)
    policy_rng = np.random.default_rng(policy_seq)

    learning_config = setup.controller
    frozen_config = learning_config.model_copy(update={"gamma": 0.0})
    controller = RhalcController(
        learning_config if setup.learning_steps > 0 else frozen_config,
        setup.scp,
        track=setup.track,
        free_space=setup.free_space,
    )
    params = VehicleParams.from_config(setup.vehicle)
    dt = learning_config.dt

    models = setup.models
    state = setup.initial_state
    states = [state]
    controls = []
    diagnostics = []
    samples = 0
    crashed = lap_complete = False
    progress = 0.0
    s_prev = setup.track.project(state.position) if setup.track is not None else None

    logger.info(
        f"Episode start: policy={setup.policy}, steps={setup.max_steps}, "
        f"learning={setup.learning_steps}, N={models.num_points}"
    )
    for t in range(setup.max_steps):
        learning = t < setup.learning_steps
        if not learning and controller.config is not frozen_config:
            controller.config = frozen_config

        if setup.policy == "rhalc":
            control, diag = controller.plan_step(t, state, models)
        else:
            control, diag = random_control(state, learning_config, policy_rng), StepDiagnostics(step=t)

        next_state, obs = step_truth(state, control, dt, params)
        diag.violated = _violated(setup, state, next_state, s_prev)
        if learning:
            models = update_dataset(models, observe_noisy(obs, setup.vehicle.noise_std, noise_rng), learning_config, setup.kernel)
            samples += 1
            diag.learning = True

        controls.append((control.accel, control.steer))
        diagnostics.append(diag)
        states.append(next_state)
        state = next_state

        if setup.track is not None:
            if not setup.track.contains(state.position):
                crashed = True
                logger.warning(f"Vehicle left the track at step {t}")
                break
            s_next = setup.track.project(state.position, s_hint=s_prev)
            ds = s_next - s_prev
            if setup.track.closed:
                ds = math.remainder(ds, setup.track.length)
            progress += ds
            s_prev = s_next
            if setup.track.closed:
                finished = progress >= setup.track.length
            else:
                finished = s_next >= setup.track.length - FINISH_TOLERANCE
            if finished and not lap_complete:
                lap_complete = True
                logger.info(f"Lap completed after {t + 1} steps")
                if setup.stop_at_lap:
                    break

    result = EpisodeResult(
        states=states,
        controls=controls,
        diagnostics=diagnostics,
        models=models,
        dt=dt,
        lap_complete=lap_complete,
        crashed=crashed,
        samples_collected=samples,
    )
    logger.info(
        f"Episode end: {result.steps} steps, {result.violations} violations, "
        f"lap_complete={lap_complete}, crashed={crashed}"
    )
    return result
