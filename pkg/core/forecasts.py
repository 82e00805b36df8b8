"""Probabilistic forecast container."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import InvalidInputError, ShapeError

STD_FLOOR = 1e-6


@dataclass(slots=True)
class ProbabilisticForecast:
    """Predictive mean and optional std per target date.

    Standard deviations are floored at ``STD_FLOOR`` so every stored
    forecast has a finite NLL.
    """

    dates: pd.DatetimeIndex
    mean: np.ndarray
    std: np.ndarray | None = None
    truth: np.ndarray | None = None
    model: str = "forecast"
    gamma: int | None = None

    def __post_init__(self) -> None:
        self.dates = pd.DatetimeIndex(self.dates, name="date")
        self.mean = np.asarray(self.mean, dtype=np.float64)
        n = len(self.dates)
        if self.mean.shape != (n,):
            raise ShapeError(f"mean has shape {self.mean.shape}, expected ({n},)")
        if self.std is not None:
            self.std = np.asarray(self.std, dtype=np.float64)
            if self.std.shape != (n,):
                raise ShapeError(f"std has shape {self.std.shape}, expected ({n},)")
            if np.any(self.std < 0) or not np.all(np.isfinite(self.std)):
                raise InvalidInputError("std must be finite and nonnegative")
            self.std = np.maximum(self.std, STD_FLOOR)
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=np.float64)
            if self.truth.shape != (n,):
                raise ShapeError(f"truth has shape {self.truth.shape}, expected ({n},)")

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def is_probabilistic(self) -> bool:
        return self.std is not None

    def with_truth(self, truth: pd.Series) -> "ProbabilisticForecast":
        values = truth.reindex(self.dates).to_numpy(dtype=np.float64)
        return ProbabilisticForecast(self.dates, self.mean, self.std, values, self.model, self.gamma)

    def to_frame(self) -> pd.DataFrame:
        n = len(self.dates)
        return pd.DataFrame(
            {
                "truth": self.truth if self.truth is not None else np.full(n, np.nan),
                "mean": self.mean,
                "std": self.std if self.std is not None else np.full(n, np.nan),
            },
            index=self.dates,
        )

    @classmethod
    def concat(cls, parts: list["ProbabilisticForecast"]) -> "ProbabilisticForecast":
        if not parts:
            raise InvalidInputError("nothing to concatenate")
        first = parts[0]
        has_std = all(p.std is not None for p in parts)
        has_truth = all(p.truth is not None for p in parts)
        return cls(
            dates=pd.DatetimeIndex(np.concatenate([p.dates.values for p in parts])),
            mean=np.concatenate([p.mean for p in parts]),
            std=np.concatenate([p.std for p in parts]) if has_std else None,
            truth=np.concatenate([p.truth for p in parts]) if has_truth else None,
            model=first.model,
            gamma=first.gamma,
        )
