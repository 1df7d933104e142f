"""
Tracks, experiment scenarios and validation metrics.
"""

from track_scenarios.exceptions import TrackFormatError, TrackScenarioError, UnknownTrackError
from track_scenarios.metrics import (
    GRID_POINTS,
    GridBounds,
    MetricsReport,
    ValidationGrid,
    compute_metrics,
    validation_grid,
)
from track_scenarios.scenarios import (
    ScenarioResult,
    generate_initial_dataset,
    run_scenario,
    scenario_controller,
)
from track_scenarios.track import (
    Track,
    available_tracks,
    load_bundled_track,
    load_track,
    save_track,
)

__all__ = [
    "TrackFormatError",
    "TrackScenarioError",
    "UnknownTrackError",
    "GRID_POINTS",
    "GridBounds",
    "MetricsReport",
    "ValidationGrid",
    "compute_metrics",
    "validation_grid",
    "ScenarioResult",
    "generate_initial_dataset",
    "run_scenario",
    "scenario_controller",
    "Track",
    "available_tracks",
    "load_bundled_track",
    "load_track",
    "save_track",
]
