"""
Validation grids and GP accuracy metrics.

The grid spans (theta, v, alpha) with linearly spaced points; truth
increments come from the noiseless simulator with zero acceleration.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from sklearn.metrics import max_error, mean_squared_error

from gp_regression.regressor import predict_mean
from rhalc_controller.models import VehicleModels
from vehicle_sim.dynamics import DEFAULT_PARAMS, step_truth
from vehicle_sim.models import ControlInput, VehicleParams, VehicleState

GRID_POINTS = 20


@dataclass(frozen=True)
class GridBounds:
    """Ranges of the validation grid."""

    theta: Tuple[float, float] = (-np.pi, np.pi)
    v: Tuple[float, float] = (0.0, 2.0)
    alpha: Tuple[float, float] = (-np.pi / 4, np.pi / 4)

    def to_dict(self) -> dict:
        return {"theta": list(self.theta), "v": list(self.v), "alpha": list(self.alpha)}


@dataclass(frozen=True)
class ValidationGrid:
    """
    Regressors and truth increments on the grid.

    Attributes:
        X_p: Position regressors [cos theta, sin theta, v, alpha], shape (P^3, 4).
        truth_p: Truth [dx, dy], shape (P^3, 2).
        X_a: Heading regressors [v, alpha], shape (P^2, 2).
        truth_a: Truth dtheta, shape (P^2,).
        points: Points per axis P.
        bounds: Grid ranges.
    """

    X_p: np.ndarray
    truth_p: np.ndarray
    X_a: np.ndarray
    truth_a: np.ndarray
    points: int
    bounds: GridBounds = field(default_factory=GridBounds)

    def spec(self) -> dict:
        return {"points": self.points, **self.bounds.to_dict()}


def validation_grid(
    bounds: Optional[GridBounds] = None,
    points: int = GRID_POINTS,
    dt: float = 0.2,
    params: VehicleParams = DEFAULT_PARAMS,
) -> ValidationGrid:
    """
    Build the validation grid.

    Args:
        bounds: Ranges of theta, v and alpha (endpoints included).
        points: Points per axis.
        dt: Sampling time used for the truth increments.
        params: Vehicle geometry.

    Returns:
        ValidationGrid with points^3 position rows and points^2 heading rows.
    """
    bounds = bounds or GridBounds()
    thetas = np.linspace(*bounds.theta, points)
    speeds = np.linspace(*bounds.v, points)
    steers = np.linspace(*bounds.alpha, points)

    X_p, truth_p = [], []
    for theta in thetas:
        for v in speeds:
            for alpha in steers:
                _, obs = step_truth(VehicleState(0.0, 0.0, float(theta), float(v)), ControlInput(0.0, float(alpha)), dt, params)
                X_p.append(obs.gp_input_p)
                truth_p.append((obs.dx, obs.dy))

    X_a, truth_a = [], []
    for v in speeds:
        for alpha in steers:
            _, obs = step_truth(VehicleState(0.0, 0.0, 0.0, float(v)), ControlInput(0.0, float(alpha)), dt, params)
            X_a.append(obs.gp_input_a)
            truth_a.append(obs.dtheta)

    return ValidationGrid(
        X_p=np.array(X_p),
        truth_p=np.array(truth_p),
        X_a=np.array(X_a),
        truth_a=np.array(truth_a),
        points=points,
        bounds=bounds,
    )


@dataclass(frozen=True)
class MetricsReport:
    """
    RMSE and maximum absolute error of the three GP means on a grid.

    Attributes:
        model_id: Identifier of the evaluated model set.
        rmse: Per-output RMSE keyed by dx, dy, dtheta.
        mae: Per-output maximum absolute error.
        grid: Grid description.
    """

    model_id: str
    rmse: Dict[str, float]
    mae: Dict[str, float]
    grid: Dict[str, object]

    def to_dict(self) -> dict:
        return {
            "model": self.model_id,
            "rmse": dict(self.rmse),
            "mae": dict(self.mae),
            "grid": dict(self.grid),
        }


def compute_metrics(models: VehicleModels, grid: ValidationGrid, model_id: str = "model") -> MetricsReport:
    """
    Compare the GP means with the truth increments on the grid.

    Args:
        models: The three dynamics GPs.
        grid: Validation grid.
        model_id: Identifier stored in the report.

    Returns:
        MetricsReport.
    """
    if grid.X_p.shape[0] == 0 or grid.X_a.shape[0] == 0:
        raise ValueError("Validation grid is empty")
    predictions = {
        "dx": (predict_mean(models.px, grid.X_p), grid.truth_p[:, 0]),
        "dy": (predict_mean(models.py, grid.X_p), grid.truth_p[:, 1]),
        "dtheta": (predict_mean(models.pa, grid.X_a), grid.truth_a),
    }
    rmse = {name: float(np.sqrt(mean_squared_error(truth, mean))) for name, (mean, truth) in predictions.items()}
    mae = {name: float(max_error(truth, mean)) for name, (mean, truth) in predictions.items()}
    return MetricsReport(model_id=model_id, rmse=rmse, mae=mae, grid=grid.spec())
