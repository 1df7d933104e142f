"""Data models for GP regression."""

from gp_regression.models.gp import GpModel, GpPrediction, KernelParams

__all__ = ["GpModel", "GpPrediction", "KernelParams"]
