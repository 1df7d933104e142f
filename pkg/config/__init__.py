"""Configuration: process settings and validated run configuration schemas."""

from config.settings import Settings, get_settings
from config.schemas import (
    ConfigError,
    ControllerConfig,
    FreeSpaceBounds,
    KernelBounds,
    OutputOptions,
    PenaltyWeights,
    QpConfig,
    RunConfig,
    ScenarioKind,
    ScenarioSpec,
    ScpConfig,
    VehicleConfig,
)

__all__ = [
    "Settings",
    "get_settings",
    "ConfigError",
    "ControllerConfig",
    "FreeSpaceBounds",
    "KernelBounds",
    "OutputOptions",
    "PenaltyWeights",
    "QpConfig",
    "RunConfig",
    "ScenarioKind",
    "ScenarioSpec",
    "ScpConfig",
    "VehicleConfig",
]
