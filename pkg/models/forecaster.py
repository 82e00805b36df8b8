"""Forecaster specifications: architecture, uncertainty mode and hyperparameters."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Architecture(str, Enum):
    FF = "ff"
    LSTM = "lstm"
    NAIVE = "naive"
    HISTORICAL = "historical"
    GP = "gp"


class UncertaintyMode(str, Enum):
    """``v`` deterministic, ``d`` data, ``m`` model, ``c`` combined."""

    V = "v"
    D = "d"
    M = "m"
    C = "c"


NEURAL_ARCHITECTURES = frozenset({Architecture.FF, Architecture.LSTM})


class ForecasterSpec(BaseModel):
    """Which forecaster to build and with which hyperparameters."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    architecture: Architecture
    uncertainty: UncertaintyMode = Field(default=UncertaintyMode.V, description="Ignored by baselines.")
    use_queries: bool = Field(default=True, description="False for the -nq variants (ILI lags only).")
    ff_hidden: int = Field(default=25, ge=1)
    lstm_hidden: int = Field(default=32, ge=1)
    lstm_dense: int = Field(default=16, ge=1)
    k: int = Field(default=100, ge=1, description="Weight samples drawn at prediction time.")
    gamma: int = Field(default=14, ge=1, description="Forecasting horizon in days.")
    rho: float = Field(default=0.25, gt=0.0, description="Sharpening factor of the output std head.")
    rho_q: float = Field(default=10.0, gt=0.0, description="Sharpening factor of the posterior std.")
    sigma_p: float = Field(default=0.5, gt=0.0, description="Prior standard deviation.")
    sigma: float = Field(default=5.0, gt=0.0, description="Output std of the -m likelihood.")
    batch_norm: bool | None = Field(default=None, description="None applies batch norm to every model except FF-v.")
    batch_norm_momentum: float = Field(default=0.99, gt=0.0, lt=1.0)
    batch_norm_epsilon: float = Field(default=1e-3, gt=0.0)
    gp_window: int = Field(default=365, ge=2, description="Trailing days the GP baseline is fit on.")

    @model_validator(mode="after")
    def _baselines_are_plain(self) -> "ForecasterSpec":
        if not self.is_neural and not self.use_queries:
            raise ValueError("baselines do not take query inputs; -nq only applies to neural models")
        return self

    @property
    def is_neural(self) -> bool:
        return self.architecture in NEURAL_ARCHITECTURES

    @property
    def is_probabilistic(self) -> bool:
        if self.architecture is Architecture.NAIVE:
            return False
        if not self.is_neural:
            return True
        return self.uncertainty is not UncertaintyMode.V

    @property
    def is_stochastic(self) -> bool:
        return self.is_neural and self.uncertainty in (UncertaintyMode.M, UncertaintyMode.C)

    @property
    def uses_batch_norm(self) -> bool:
        if not self.is_neural:
            return False
        if self.batch_norm is not None:
            return self.batch_norm
        return not (self.architecture is Architecture.FF and self.uncertainty is UncertaintyMode.V)

    @property
    def model_id(self) -> str:
        if not self.is_neural:
            return self.architecture.value
        suffix = "" if self.use_queries else "-nq"
        return f"{self.architecture.value}-{self.uncertainty.value}{suffix}"

    @classmethod
    def parse(cls, text: str, **overrides: object) -> "ForecasterSpec":
        """Parse ``ff-c``, ``lstm-v-nq``, ``naive``, ``historical`` or ``gp``."""
        parts = text.strip().lower().split("-")
        try:
            architecture = Architecture(parts[0])
        except ValueError as exc:
            raise ValueError(f"unknown architecture in model spec {text!r}") from exc
        fields: dict[str, object] = {"architecture": architecture}
        rest = parts[1:]
        if architecture in NEURAL_ARCHITECTURES:
            if not rest:
                raise ValueError(f"model spec {text!r} needs an uncertainty mode (v, d, m or c)")
            try:
                fields["uncertainty"] = UncertaintyMode(rest[0])
            except ValueError as exc:
                raise ValueError(f"unknown uncertainty mode in model spec {text!r}") from exc
            rest = rest[1:]
            if rest == ["nq"]:
                fields["use_queries"] = False
                rest = []
        if rest:
            raise ValueError(f"unrecognised suffix in model spec {text!r}")
        fields.update(overrides)
        return cls(**fields)
