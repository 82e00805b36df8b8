"""Pydantic models for configuration, reports and the API."""

from .api import CalibrationRequest, ScoreRequest
from .data import DataSource, QueryProfile, SyntheticConfig, default_queries
from .experiment import (
	ExperimentConfig,
	Hyperparameters,
	RunManifest,
	RunRecord,
	RunStatus,
	RunSummary,
	TrainingSettings,
	season_bounds,
)
from .forecaster import Architecture, ForecasterSpec, UncertaintyMode
from .metrics import (
	METRIC_NAMES,
	PROBABILISTIC_METRICS,
	CalibrationCurve,
	MetricsRow,
	SignificanceResult,
)
from .settings import ToolkitSettings
from .training import LossKind, LossSpec, ScheduleKind, ScheduleSpec, TrainConfig

__all__ = [
	"Architecture",
	"CalibrationCurve",
	"CalibrationRequest",
	"DataSource",
	"ExperimentConfig",
	"ForecasterSpec",
	"Hyperparameters",
	"LossKind",
	"LossSpec",
	"METRIC_NAMES",
	"MetricsRow",
	"PROBABILISTIC_METRICS",
	"QueryProfile",
	"RunManifest",
	"RunRecord",
	"RunStatus",
	"RunSummary",
	"ScheduleKind",
	"ScheduleSpec",
	"ScoreRequest",
	"SignificanceResult",
	"SyntheticConfig",
	"ToolkitSettings",
	"TrainConfig",
	"TrainingSettings",
	"UncertaintyMode",
	"default_queries",
	"season_bounds",
]
