"""Request and response bodies of the scoring endpoints."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class ScoreRequest(BaseModel):
    """Truth and forecast series aligned by position."""

    model: str = Field("submitted", min_length=1)
    gamma: int = Field(14, ge=1)
    truth: list[float] = Field(..., min_length=2)
    mean: list[float] = Field(..., min_length=2)
    std: list[float] | None = Field(default=None, description="Omit for point forecasts.")

    @model_validator(mode="after")
    def _aligned(self) -> "ScoreRequest":
        if len(self.mean) != len(self.truth):
            raise ValueError("truth and mean must have equal length")
        if self.std is not None:
            if len(self.std) != len(self.truth):
                raise ValueError("std must have the same length as truth")
            if any(value < 0 for value in self.std):
                raise ValueError("std must be nonnegative")
        return self


class CalibrationRequest(BaseModel):
    truth: list[float] = Field(..., min_length=1)
    mean: list[float] = Field(..., min_length=1)
    std: list[float] = Field(..., min_length=1)
    levels: list[float] | None = None

    @model_validator(mode="after")
    def _aligned(self) -> "CalibrationRequest":
        if not len(self.truth) == len(self.mean) == len(self.std):
            raise ValueError("truth, mean and std must have equal length")
        if any(value < 0 for value in self.std):
            raise ValueError("std must be nonnegative")
        return self
