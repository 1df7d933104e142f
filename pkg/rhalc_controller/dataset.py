"""
Online dataset growth for the three dynamics GPs.

Observations are appended every ``retrain_every`` samples by rebuilding the
factorizations; hyperparameters are refitted every ``refit_every`` samples.
"""

from dataclasses import replace
from typing import List, Optional, Sequence
import logging

import numpy as np

from config.schemas import ControllerConfig, KernelBounds
from gp_regression.exceptions import FittingFailedError, SingularKernelError
from gp_regression.fitting import fit_hyperparameters
from gp_regression.models.gp import GpModel, KernelParams
from gp_regression.regressor import build_model
from rhalc_controller.models import (
    DEFAULT_KERNEL_A,
    DEFAULT_KERNEL_P,
    VehicleModels,
    stack_observations,
)
from vehicle_sim.models import StepObservation

logger = logging.getLogger(__name__)


def _build_all(
    X_p: np.ndarray, X_a: np.ndarray, Y: np.ndarray, kernels: Sequence[KernelParams]
) -> List[GpModel]:
    return [
        build_model(X_p, Y[:, 0], kernels[0]),
        build_model(X_p, Y[:, 1], kernels[1]),
        build_model(X_a, Y[:, 2], kernels[2]),
    ]


def refit_models(models: VehicleModels, bounds: Optional[KernelBounds] = None, seed: int = 0) -> VehicleModels:
    """
    Refit the hyperparameters of all three GPs on their current data.

    A GP whose fit fails keeps its kernel.
    """
    bounds = bounds or KernelBounds()
    refitted = {}
    for i, (name, model) in enumerate(models.items()):
        if model.num_points < 2:
            refitted[name] = model
            continue
        try:
            kernel = fit_hyperparameters(
                model.inputs, model.targets, model.kernel, restarts=bounds.restarts, bounds=bounds, seed=seed + i
            )
            refitted[name] = model.with_kernel(kernel)
        except (FittingFailedError, SingularKernelError) as e:
            logger.warning(f"Hyperparameter refit of {name} failed, keeping kernel: {e}")
            refitted[name] = model
    return replace(models, **refitted)


def models_from_observations(
    observations: Sequence[StepObservation],
    bounds: Optional[KernelBounds] = None,
    fit: bool = True,
    seed: int = 0,
) -> VehicleModels:
    """
    Build the three GPs from a batch of observations.

    Args:
        observations: Historical data.
        bounds: Hyperparameter box for fitting.
        fit: Fit hyperparameters (starting from the default kernels).
        seed: Seed of the randomized fitting restarts.

    Returns:
        VehicleModels with ``samples_added`` = 0.
    """
    X_p, X_a, Y = stack_observations(list(observations))
    px, py, pa = _build_all(X_p, X_a, Y, (DEFAULT_KERNEL_P, DEFAULT_KERNEL_P, DEFAULT_KERNEL_A))
    models = VehicleModels(px=px, py=py, pa=pa)
    if fit:
        models = refit_models(models, bounds, seed)
    logger.info(f"Built dynamics models from {len(observations)} observations")
    return models


def _append(models: VehicleModels, batch: List[StepObservation]) -> VehicleModels:
    kernels = [model.kernel for _, model in models.items()]
    while batch:
        X_p, X_a, Y = stack_observations(batch)
        try:
            px, py, pa = _build_all(
                np.vstack([models.px.inputs, X_p]),
                np.vstack([models.pa.inputs, X_a]),
                np.vstack([np.column_stack([models.px.targets, models.py.targets, models.pa.targets]), Y]),
                kernels,
            )
        except SingularKernelError as e:
            logger.warning(f"Dropping newest sample after factorization failure: {e}")
            batch = batch[:-1]
            continue
        return replace(models, px=px, py=py, pa=pa, pending=())
    return replace(models, pending=())


def update_dataset(
    models: VehicleModels,
    obs: StepObservation,
    config: Optional[ControllerConfig] = None,
    bounds: Optional[KernelBounds] = None,
) -> VehicleModels:
    """
    Add one observation to the three GP datasets.

    Appends (x_p, dx), (x_p, dy) and (x_a, dtheta). Factorizations are
    rebuilt once ``retrain_every`` observations are pending and the
    hyperparameters are refitted every ``refit_every`` samples. If the
    rebuilt factorization fails the newest sample is dropped.

    Args:
        models: Current models.
        obs: Finite observation.
        config: Retraining cadence.
        bounds: Hyperparameter box for refits.

    Returns:
        New VehicleModels; the input is not modified.
    """
    if not obs.is_finite():
        raise ValueError("Observation must be finite")
    config = config or ControllerConfig()
    pending = list(models.pending) + [obs]
    samples = models.samples_added + 1
    updated = replace(models, pending=tuple(pending), samples_added=samples)

    if len(pending) >= config.retrain_every:
        updated = _append(updated, pending)
    if samples % config.refit_every == 0:
        if updated.pending:
            updated = _append(updated, list(updated.pending))
        updated = refit_models(updated, bounds, seed=samples)
        logger.info(f"Refitted hyperparameters after {samples} online samples (N={updated.num_points})")
    return updated
