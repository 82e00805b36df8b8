"""Experiment configuration and the manifest written by a protocol run."""

from __future__ import annotations

import hashlib
import json
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .data import DataSource
from .forecaster import Architecture, ForecasterSpec
from .metrics import MetricsRow
from .training import ScheduleSpec, TrainConfig

SEASON_START = (8, 23)
NON_SEMANTIC_FIELDS = frozenset({"output_dir", "jobs"})


def season_bounds(start_year: int) -> tuple[date, date]:
    """A test season runs from August 23 to August 22 of the following year."""
    month, day = SEASON_START
    return date(start_year, month, day), date(start_year + 1, month, day - 1)


class Hyperparameters(BaseModel):
    """Network and uncertainty hyperparameters shared by every neural model."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    ff_hidden: int = Field(default=25, ge=1)
    lstm_hidden: int = Field(default=32, ge=1)
    lstm_dense: int = Field(default=16, ge=1)
    rho: float = Field(default=0.25, gt=0.0)
    rho_q: float = Field(default=10.0, gt=0.0)
    sigma_p: float = Field(default=0.5, gt=0.0)
    sigma: float = Field(default=5.0, gt=0.0)
    batch_norm_momentum: float = Field(default=0.99, gt=0.0, lt=1.0)
    batch_norm_epsilon: float = Field(default=1e-3, gt=0.0)


class TrainingSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    epochs: int = Field(default=200, ge=0)
    batch_size: int = Field(default=32, ge=2)
    ff_schedule: ScheduleSpec = Field(default_factory=ScheduleSpec.exponential)
    lstm_schedule: ScheduleSpec = Field(default_factory=ScheduleSpec.cosine_warmup)
    lstm_clip_norm: float | None = Field(default=5.0, gt=0.0)

    def train_config(self, architecture: Architecture, seed: int) -> TrainConfig:
        if architecture is Architecture.LSTM:
            return TrainConfig(
                epochs=self.epochs,
                batch_size=self.batch_size,
                seed=seed,
                schedule=self.lstm_schedule,
                clip_norm=self.lstm_clip_norm,
            )
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size, seed=seed, schedule=self.ff_schedule)


class ExperimentConfig(BaseModel):
    """The full rolling-season evaluation protocol."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    data: DataSource = Field(default_factory=DataSource)
    seasons: list[int] = Field(default_factory=lambda: [2014, 2015, 2016, 2017], min_length=1)
    horizons: list[int] = Field(default_factory=lambda: [7, 14, 21], min_length=1)
    models: list[str] = Field(
        default_factory=lambda: [
            "ff-v", "ff-d", "ff-m", "ff-c",
            "lstm-v", "lstm-d", "lstm-m", "lstm-c",
            "naive", "historical", "gp",
        ],
        min_length=1,
    )
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2], min_length=1)
    lag: int = Field(default=28, ge=1, description="Days of history per input row.")
    delay: int = Field(default=7, ge=0, description="Reporting delay of the ILI rate.")
    k: int = Field(default=100, ge=1)
    hyperparameters: Hyperparameters = Field(default_factory=Hyperparameters)
    training: TrainingSettings = Field(default_factory=TrainingSettings)
    selection_threshold: float = Field(default=0.3, ge=-1.0, le=1.0)
    smooth_before_normalize: bool = True
    gp_window: int = Field(default=365, ge=2)
    significance_alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    calibration_levels: list[float] | None = Field(default=None, description="None uses 0 to 3 sigma in 0.1 steps.")
    output_dir: Path | None = None
    jobs: int | None = Field(default=None, ge=1, description="Worker processes; None defers to the caller.")

    @field_validator("models")
    @classmethod
    def _parseable(cls, models: list[str]) -> list[str]:
        for text in models:
            ForecasterSpec.parse(text)
        if len(set(models)) != len(models):
            raise ValueError("model list contains duplicates")
        return models

    @field_validator("horizons", "seasons", "seeds")
    @classmethod
    def _distinct(cls, values: list[int]) -> list[int]:
        if len(set(values)) != len(values):
            raise ValueError("values must be distinct")
        return values

    @field_validator("horizons")
    @classmethod
    def _positive(cls, values: list[int]) -> list[int]:
        if any(value < 1 for value in values):
            raise ValueError("horizons must be positive")
        return values

    def forecaster(self, text: str, gamma: int) -> ForecasterSpec:
        hp = self.hyperparameters
        return ForecasterSpec.parse(
            text,
            gamma=gamma,
            k=self.k,
            ff_hidden=hp.ff_hidden,
            lstm_hidden=hp.lstm_hidden,
            lstm_dense=hp.lstm_dense,
            rho=hp.rho,
            rho_q=hp.rho_q,
            sigma_p=hp.sigma_p,
            sigma=hp.sigma,
            batch_norm_momentum=hp.batch_norm_momentum,
            batch_norm_epsilon=hp.batch_norm_epsilon,
            gp_window=self.gp_window,
        )

    def config_hash(self) -> str:
        payload = self.model_dump(mode="json", exclude=set(NON_SEMANTIC_FIELDS))
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class RunStatus(str, Enum):
    OK = "ok"
    FAILED = "failed"


class RunRecord(BaseModel):
    """One (season, horizon, model, seed) job."""

    run_id: str
    model: str
    gamma: int
    seed: int
    season: int
    status: RunStatus
    error: str | None = None
    train_start: date | None = None
    train_target_end: date | None = Field(default=None, description="Last training target date.")
    preprocessing_fit_end: date | None = Field(default=None, description="Last date query statistics saw.")
    test_start: date
    test_end: date
    selected_queries: list[str] = Field(default_factory=list)
    metrics: MetricsRow | None = None
    artifacts: dict[str, str] = Field(default_factory=dict)
    loss_trace: list[float] = Field(default_factory=list)
    wall_clock_seconds: float = 0.0


class RunManifest(BaseModel):
    run_id: str
    config_hash: str
    toolkit_version: str
    created_at: datetime
    finished_at: datetime | None = None
    wall_clock_seconds: float = 0.0
    output_dir: str
    config: dict[str, Any]
    runs: list[RunRecord] = Field(default_factory=list)
    tables: dict[str, str] = Field(default_factory=dict)
    audit_passed: bool | None = None

    @property
    def failed(self) -> list[RunRecord]:
        return [run for run in self.runs if run.status is RunStatus.FAILED]


class RunSummary(BaseModel):
    """Lightweight representation for list responses."""

    run_id: str
    config_hash: str
    created_at: datetime
    finished_at: datetime | None = None
    run_count: int = 0
    failed_count: int = 0
    audit_passed: bool | None = None
