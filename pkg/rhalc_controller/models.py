"""
Data models for the receding-horizon controller.

The three dynamics GPs, per-step diagnostics and episode results.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union
import json
import statistics

import numpy as np
import pandas as pd

from gp_regression.models.gp import GpModel, KernelParams
from gp_regression.regressor import load_model, prior_model, save_model
from vehicle_sim.models import StepObservation, VehicleState

# Initial guesses before the first hyperparameter fit.
DEFAULT_KERNEL_P = KernelParams(signal_variance=0.1, lengthscales=(1.0, 1.0, 1.0, 1.0), noise_variance=2.5e-5)
DEFAULT_KERNEL_A = KernelParams(signal_variance=0.1, lengthscales=(1.0, 1.0), noise_variance=4e-6)

MODEL_FILES = ("px", "py", "pa")


@dataclass(frozen=True)
class VehicleModels:
    """
    Independent GPs for dx, dy (on x_p) and dtheta (on x_a).

    Attributes:
        px: Model of the x increment.
        py: Model of the y increment.
        pa: Model of the heading increment.
        samples_added: Online samples incorporated since construction.
        pending: Observations collected but not yet in the factorizations.
    """

    px: GpModel
    py: GpModel
    pa: GpModel
    samples_added: int = 0
    pending: Tuple[StepObservation, ...] = ()

    @classmethod
    def prior(cls) -> "VehicleModels":
        """Models without data under the default kernels."""
        return cls(
            px=prior_model(DEFAULT_KERNEL_P),
            py=prior_model(DEFAULT_KERNEL_P),
            pa=prior_model(DEFAULT_KERNEL_A),
        )

    @property
    def num_points(self) -> int:
        """Dataset size (identical for the three GPs), pending samples included."""
        return self.px.num_points + len(self.pending)

    def items(self) -> List[Tuple[str, GpModel]]:
        return [("px", self.px), ("py", self.py), ("pa", self.pa)]

    def to_dict(self) -> dict:
        return {name: model.to_dict() for name, model in self.items()}


def save_models(models: VehicleModels, directory: Union[str, Path], model_id: str) -> Path:
    """Write ``px.gp``, ``py.gp``, ``pa.gp`` and ``manifest.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, model in models.items():
        save_model(model, directory / f"{name}.gp")
    manifest = {"model_id": model_id, "num_points": models.num_points, "files": [f"{n}.gp" for n in MODEL_FILES]}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return directory


def load_models(directory: Union[str, Path]) -> Tuple[VehicleModels, str]:
    """
    Read a model directory written by ``save_models``.

    Returns:
        Tuple of (models, model identifier).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Model directory not found: {directory}")
    manifest_path = directory / "manifest.json"
    model_id = directory.name
    if manifest_path.exists():
        model_id = json.loads(manifest_path.read_text(encoding="utf-8")).get("model_id", model_id)
    loaded = {name: load_model(directory / f"{name}.gp") for name in MODEL_FILES}
    return VehicleModels(**loaded), model_id


@dataclass
class StepDiagnostics:
    """
    Per-step record of the control loop.

    Attributes:
        step: Time index t.
        solve_ms: Wall time of the planner (ms).
        fallback: Whether the safe fallback control was applied.
        scp: Solver diagnostics (``ScpState.to_dict``), empty for non-RHALC policies.
        violated: Whether the next truth position left the step-0 corridor.
        learning: Whether the step's observation was added to the models.
    """

    step: int
    solve_ms: float = 0.0
    fallback: bool = False
    scp: Dict[str, Any] = field(default_factory=dict)
    violated: bool = False
    learning: bool = False

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "solve_ms": self.solve_ms,
            "fallback": self.fallback,
            "violated": self.violated,
            "learning": self.learning,
            **self.scp,
        }


TRAJECTORY_COLUMNS = ["t", "x", "y", "theta", "v", "a", "alpha", "solve_ms", "violated"]


@dataclass
class EpisodeResult:
    """
    Outcome of one closed-loop episode.

    Attributes:
        states: Visited truth states, initial state included.
        controls: Applied [a, alpha] per step.
        diagnostics: One record per step.
        models: Models at the end of the episode.
        dt: Sampling time (s).
        lap_complete: Whether a full lap was driven (track episodes).
        crashed: Whether the vehicle left the track.
        samples_collected: Observations added to the models.
    """

    states: List[VehicleState]
    controls: List[Tuple[float, float]]
    diagnostics: List[StepDiagnostics]
    models: VehicleModels
    dt: float = 0.2
    lap_complete: bool = False
    crashed: bool = False
    samples_collected: int = 0

    @property
    def steps(self) -> int:
        return len(self.controls)

    @property
    def violations(self) -> int:
        return sum(1 for d in self.diagnostics if d.violated)

    @property
    def solve_times_ms(self) -> List[float]:
        return [d.solve_ms for d in self.diagnostics]

    def to_frame(self, include_timing: bool = False) -> pd.DataFrame:
        """
        Trajectory table, one row per applied control.

        ``solve_ms`` is left empty unless ``include_timing`` is set, so that
        repeated runs produce identical files.
        """
        rows = []
        for k, ((a, alpha), diag) in enumerate(zip(self.controls, self.diagnostics)):
            s = self.states[k]
            rows.append(
                {
                    "t": round(k * self.dt, 9),
                    "x": s.x,
                    "y": s.y,
                    "theta": s.theta,
                    "v": s.v,
                    "a": a,
                    "alpha": alpha,
                    "solve_ms": diag.solve_ms if include_timing else None,
                    "violated": int(diag.violated),
                }
            )
        return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)

    def summary(self) -> dict:
        """JSON summary of the episode."""
        times = self.solve_times_ms
        return {
            "steps": self.steps,
            "lap_complete": self.lap_complete,
            "crashed": self.crashed,
            "samples_collected": self.samples_collected,
            "violations": self.violations,
            "fallbacks": sum(1 for d in self.diagnostics if d.fallback),
            "final_dataset_size": self.models.num_points,
            "mean_solve_ms": statistics.fmean(times) if times else None,
            "median_solve_ms": statistics.median(times) if times else None,
        }

    def final_state(self) -> Optional[VehicleState]:
        return self.states[-1] if self.states else None


def stack_observations(observations: List[StepObservation]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Regressors and targets of a batch: (X_p (N, 4), X_a (N, 2), Y (N, 3))."""
    X_p = np.array([obs.gp_input_p for obs in observations], dtype=float).reshape(-1, 4)
    X_a = np.array([obs.gp_input_a for obs in observations], dtype=float).reshape(-1, 2)
    Y = np.array([obs.increments for obs in observations], dtype=float).reshape(-1, 3)
    return X_p, X_a, Y
