"""Persistence (naive) and historical-average baselines."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date
from typing import Iterable

import numpy as np
import pandas as pd

from models.forecaster import ForecasterSpec

from .autodiff import Parameter
from .errors import DataGapError, InsufficientDataError
from .forecasts import ProbabilisticForecast
from .series import as_timestamp

logger = logging.getLogger(__name__)

MIN_HISTORY_YEARS = 2


def _origins(origins: date | pd.Timestamp | Iterable[date | pd.Timestamp]) -> pd.DatetimeIndex:
    if isinstance(origins, (date, pd.Timestamp, str)):
        origins = [origins]
    return pd.DatetimeIndex([as_timestamp(o) for o in origins], name="date")


def naive_forecast(ili: pd.Series, origins: date | Iterable[date], gamma: int, delay: int) -> ProbabilisticForecast:
    """Forecast ILI at ``origin + gamma`` as the last available value ``ILI(origin - delay)``."""
    origins = _origins(origins)
    available = origins - pd.Timedelta(days=delay)
    values = ili.reindex(available)
    if values.isna().any():
        missing = available[np.flatnonzero(values.isna().to_numpy())[0]]
        raise DataGapError(f"ILI series does not cover {missing.date()}", missing=missing.date())
    return ProbabilisticForecast(
        dates=origins + pd.Timedelta(days=gamma),
        mean=values.to_numpy(dtype=np.float64),
        model="naive",
        gamma=gamma,
    )


def _same_day(year: int, target: pd.Timestamp) -> pd.Timestamp:
    if target.month == 2 and target.day == 29:
        try:
            return pd.Timestamp(year, 2, 29)
        except ValueError:
            return pd.Timestamp(year, 2, 28)
    return pd.Timestamp(year, target.month, target.day)


def historical_average(ili: pd.Series, target_date: date | pd.Timestamp) -> tuple[float, float]:
    """Mean and population std of ILI on the same calendar day of every earlier year.

    Feb 29 falls back to Feb 28 in non-leap years.
    """
    target = as_timestamp(target_date)
    first_year = ili.index[0].year if len(ili) else target.year
    values = []
    for year in range(first_year, target.year):
        day = _same_day(year, target)
        if day in ili.index:
            values.append(float(ili.loc[day]))
    if len(values) < MIN_HISTORY_YEARS:
        raise InsufficientDataError(f"only {len(values)} earlier years cover {target.month:02d}-{target.day:02d}")
    values = np.asarray(values)
    return float(values.mean()), float(values.std())


def historical_forecast(ili: pd.Series, origins: date | Iterable[date], gamma: int, delay: int) -> ProbabilisticForecast:
    """Historical average for each ``origin + gamma`` using only data up to ``origin - delay``."""
    origins = _origins(origins)
    means, stds = [], []
    for origin in origins:
        history = ili.loc[: origin - pd.Timedelta(days=delay)]
        mean, std = historical_average(history, origin + pd.Timedelta(days=gamma))
        means.append(mean)
        stds.append(std)
    return ProbabilisticForecast(
        dates=origins + pd.Timedelta(days=gamma),
        mean=np.asarray(means),
        std=np.asarray(stds),
        model="historical",
        gamma=gamma,
    )


@dataclass(slots=True)
class NaiveForecaster:
    spec: ForecasterSpec

    def parameters(self) -> list[Parameter]:
        return []

    def forecast(self, ili: pd.Series, origins: Iterable[date], delay: int) -> ProbabilisticForecast:
        return naive_forecast(ili, origins, self.spec.gamma, delay)


@dataclass(slots=True)
class HistoricalAverageForecaster:
    spec: ForecasterSpec

    def parameters(self) -> list[Parameter]:
        return []

    def forecast(self, ili: pd.Series, origins: Iterable[date], delay: int) -> ProbabilisticForecast:
        return historical_forecast(ili, origins, self.spec.gamma, delay)
