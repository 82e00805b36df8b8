"""Report models: metric rows, calibration curves and significance results."""

from __future__ import annotations

from pydantic import BaseModel, Field, field_validator, model_validator

METRIC_NAMES: tuple[str, ...] = ("crps", "nll", "mae", "rmse", "smape", "r", "sdp")
PROBABILISTIC_METRICS: frozenset[str] = frozenset({"crps", "nll"})


class MetricsRow(BaseModel):
    """Scores of one model at one horizon; probabilistic fields are None for point models."""

    model: str
    gamma: int = Field(ge=1)
    season: int | None = Field(default=None, description="Season start year; None once aggregated.")
    crps: float | None = Field(default=None, ge=0.0)
    nll: float | None = None
    mae: float = Field(ge=0.0)
    rmse: float = Field(ge=0.0)
    smape: float = Field(ge=0.0, le=200.0)
    r: float | None = Field(default=None, ge=-1.0 - 1e-12, le=1.0 + 1e-12)
    sdp: float | None = Field(default=None, description="None when the forecast is shorter than the smoothing window.")

    def value(self, metric: str) -> float | None:
        if metric not in METRIC_NAMES:
            raise KeyError(metric)
        return getattr(self, metric)

    @property
    def is_probabilistic(self) -> bool:
        return self.crps is not None


class CalibrationCurve(BaseModel):
    """Nominal central-interval level against the observed coverage."""

    levels: list[float]
    coverage: list[float]
    coverage_std: list[float] | None = Field(default=None, description="Spread over seeds when averaged.")

    @field_validator("levels")
    @classmethod
    def _increasing(cls, levels: list[float]) -> list[float]:
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("levels must be strictly increasing")
        if any(not 0.0 <= level < 1.0 for level in levels):
            raise ValueError("levels must lie in [0, 1)")
        return levels

    @model_validator(mode="after")
    def _coverage_shape(self) -> "CalibrationCurve":
        if len(self.coverage) != len(self.levels):
            raise ValueError("coverage and levels must have equal length")
        if any(not 0.0 <= c <= 1.0 for c in self.coverage):
            raise ValueError("coverage must lie in [0, 1]")
        if any(b < a for a, b in zip(self.coverage, self.coverage[1:])):
            raise ValueError("coverage must be nondecreasing in the level")
        return self


class SignificanceResult(BaseModel):
    model_a: str
    model_b: str
    gamma: int | None = None
    metric: str
    statistic: float
    p_value: float = Field(ge=0.0, le=1.0)
    threshold: float = Field(gt=0.0, le=1.0)
    significant: bool
