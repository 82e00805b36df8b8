"""Settings for the synthetic ILI / query-frequency generator and data sources."""

from __future__ import annotations

from datetime import date
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class QueryProfile(BaseModel):
    """One generated search query."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    query_id: str = Field(..., min_length=1)
    lag: int = Field(default=0, ge=0, description="Days by which the query trails the ILI signal.")
    scale: float = Field(default=1.0, gt=0.0)
    noise: float = Field(default=0.1, ge=0.0, description="Response noise relative to the query's peak level.")
    distractor: bool = Field(default=False, description="Seasonal noise unrelated to ILI.")


def default_queries() -> list[QueryProfile]:
    signal = [
        QueryProfile(query_id=f"signal_{i:02d}", lag=lag, scale=scale, noise=noise)
        for i, (lag, scale, noise) in enumerate(
            [(0, 1.0, 0.05), (1, 0.8, 0.1), (2, 1.2, 0.15), (3, 0.6, 0.1), (0, 0.9, 0.25), (5, 1.1, 0.2)]
        )
    ]
    distractors = [
        QueryProfile(query_id=f"distractor_{i:02d}", scale=1.0, noise=0.3, distractor=True) for i in range(6)
    ]
    return signal + distractors


class SyntheticConfig(BaseModel):
    """Parameters of the seasonal ILI generator.

    Peak timing is measured in days after the August 23 season start.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    start_date: date = Field(default=date(2004, 1, 1))
    years: int = Field(default=15, ge=5)
    peak_day_mean: float = Field(default=135.0, ge=0.0, le=365.0, description="Early January by default.")
    peak_day_jitter: float = Field(default=30.0, ge=0.0)
    peak_width_days: float = Field(default=16.0, gt=0.0)
    peak_intensity_mean: float = Field(default=40.0, gt=0.0, description="ILI rate per 100,000 above baseline.")
    peak_intensity_jitter: float = Field(default=0.4, ge=0.0, lt=1.0, description="Relative spread of peak height.")
    baseline: float = Field(default=5.0, ge=0.0)
    noise_scale: float = Field(default=1.0, ge=0.0)
    queries: list[QueryProfile] = Field(default_factory=default_queries)
    seed: int = 0

    @model_validator(mode="after")
    def _unique_queries(self) -> "SyntheticConfig":
        ids = [query.query_id for query in self.queries]
        if len(ids) != len(set(ids)):
            raise ValueError("query ids must be unique")
        return self


class DataSource(BaseModel):
    """Either a synthetic generator config or a pair of CSV files."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    synthetic: SyntheticConfig | None = None
    ili_csv: Path | None = Field(default=None, description="Weekly `date,ili_rate` file.")
    queries_csv: Path | None = Field(default=None, description="Daily `date,<query ids...>` file.")

    @model_validator(mode="before")
    @classmethod
    def _default_to_synthetic(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("synthetic") is None and data.get("ili_csv") is None:
            return {**data, "synthetic": {}}
        return data

    @model_validator(mode="after")
    def _one_source(self) -> "DataSource":
        if self.synthetic is not None and self.ili_csv is not None:
            raise ValueError("choose either a synthetic config or CSV paths, not both")
        if self.queries_csv is not None and self.ili_csv is None:
            raise ValueError("queries_csv needs an ili_csv")
        return self
