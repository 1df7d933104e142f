"""
Receding-horizon active learning and control of the racing car.

Corridors and reference windows, the per-step planner, online dataset
growth and closed-loop episodes.
"""

from rhalc_controller.controller import RhalcController, fallback_control, sanitize_controls
from rhalc_controller.corridor import (
    Corridor,
    HalfPlaneSet,
    ReferenceWindow,
    box_corridor,
    build_corridor,
    hold_reference,
    track_reference,
)
from rhalc_controller.dataset import models_from_observations, refit_models, update_dataset
from rhalc_controller.episode import EpisodeSetup, random_control, run_episode
from rhalc_controller.models import (
    EpisodeResult,
    StepDiagnostics,
    VehicleModels,
    load_models,
    save_models,
)

__all__ = [
    "RhalcController",
    "fallback_control",
    "sanitize_controls",
    "Corridor",
    "HalfPlaneSet",
    "ReferenceWindow",
    "box_corridor",
    "build_corridor",
    "hold_reference",
    "track_reference",
    "models_from_observations",
    "refit_models",
    "update_dataset",
    "EpisodeSetup",
    "random_control",
    "run_episode",
    "EpisodeResult",
    "StepDiagnostics",
    "VehicleModels",
    "load_models",
    "save_models",
]
