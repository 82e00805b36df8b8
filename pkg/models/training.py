"""Loss, schedule and training-run settings."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .forecaster import Architecture


class LossKind(str, Enum):
    MSE = "mse"
    GAUSSIAN_NLL = "gaussian_nll"
    NEGATIVE_ELBO = "negative_elbo"


class LossSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: LossKind
    sigma: float | None = Field(
        default=None,
        gt=0.0,
        description="Fixed output std of the likelihood; only set for model-uncertainty (-m) ELBO training.",
    )


class ScheduleKind(str, Enum):
    EXPONENTIAL = "exponential"
    COSINE_WARMUP = "cosine_warmup"


class ScheduleSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ScheduleKind
    base_rate: float = Field(gt=0.0)
    decay: float = Field(default=0.98, gt=0.0, le=1.0)
    warmup_epochs: int = Field(default=10, ge=0)
    min_rate: float = Field(default=1e-5, gt=0.0)

    @classmethod
    def exponential(cls, base_rate: float = 0.01, decay: float = 0.98) -> "ScheduleSpec":
        return cls(kind=ScheduleKind.EXPONENTIAL, base_rate=base_rate, decay=decay)

    @classmethod
    def cosine_warmup(cls, base_rate: float = 0.005, warmup_epochs: int = 10, min_rate: float = 1e-5) -> "ScheduleSpec":
        return cls(kind=ScheduleKind.COSINE_WARMUP, base_rate=base_rate, warmup_epochs=warmup_epochs, min_rate=min_rate)

    @classmethod
    def default_for(cls, architecture: Architecture) -> "ScheduleSpec":
        if architecture is Architecture.LSTM:
            return cls.cosine_warmup()
        return cls.exponential()


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    epochs: int = Field(default=200, ge=0, description="0 leaves the model untouched.")
    batch_size: int = Field(default=32, ge=2)
    seed: int = 0
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec.exponential)
    loss: LossSpec | None = Field(default=None, description="None derives the loss from the model's uncertainty mode.")
    k_train: int = Field(default=1, ge=1, description="Posterior samples per training step.")
    clip_norm: float | None = Field(default=None, gt=0.0, description="Global gradient-norm clip.")

    @model_validator(mode="after")
    def _warmup_fits(self) -> "TrainConfig":
        if (
            self.schedule.kind is ScheduleKind.COSINE_WARMUP
            and self.epochs > 0
            and self.schedule.warmup_epochs >= self.epochs
        ):
            raise ValueError("warmup_epochs must be smaller than epochs")
        return self

    @classmethod
    def for_architecture(cls, architecture: Architecture, **overrides: object) -> "TrainConfig":
        fields: dict[str, object] = {"schedule": ScheduleSpec.default_for(architecture)}
        if architecture is Architecture.LSTM:
            fields["clip_norm"] = 5.0
        fields.update(overrides)
        return cls(**fields)
