"""Validation helpers for date-indexed pandas series and query panels.

Weekly ILI series, daily series and query panels are plain pandas objects
with a ``DatetimeIndex`` named ``date``; these helpers enforce their
invariants.
"""

from __future__ import annotations

from datetime import date

import numpy as np
import pandas as pd

from .errors import DataGapError, InsufficientDataError, InvalidInputError

DAY = pd.Timedelta(days=1)
WEEK = pd.Timedelta(days=7)


def as_timestamp(value: date | str | pd.Timestamp) -> pd.Timestamp:
    return pd.Timestamp(value).normalize()


def first_gap(index: pd.DatetimeIndex) -> pd.Timestamp | None:
    """First calendar day missing between the first and last entry."""
    if len(index) < 2:
        return None
    steps = np.asarray((index[1:] - index[:-1]).days)
    jumps = np.flatnonzero(steps != 1)
    if jumps.size == 0:
        return None
    return index[jumps[0]] + DAY


def _check_index(obj: pd.Series | pd.DataFrame, label: str) -> None:
    if not isinstance(obj.index, pd.DatetimeIndex):
        raise InvalidInputError(f"{label} must be indexed by date")
    if obj.index.has_duplicates:
        raise InvalidInputError(f"{label} has duplicate dates")
    if not obj.index.is_monotonic_increasing:
        raise InvalidInputError(f"{label} dates must be increasing")


def ensure_daily(series: pd.Series, label: str = "series") -> pd.Series:
    _check_index(series, label)
    gap = first_gap(series.index)
    if gap is not None:
        raise DataGapError(f"{label} is missing {gap.date()}", missing=gap.date())
    if not np.all(np.isfinite(series.to_numpy(dtype=np.float64))):
        raise InvalidInputError(f"{label} contains non-finite values")
    return series


def ensure_weekly(series: pd.Series, label: str = "weekly series") -> pd.Series:
    _check_index(series, label)
    if len(series) >= 2:
        steps = np.asarray((series.index[1:] - series.index[:-1]).days)
        bad = np.flatnonzero(steps != 7)
        if bad.size:
            missing = series.index[bad[0]] + WEEK
            raise DataGapError(f"{label} is not spaced weekly after {series.index[bad[0]].date()}", missing=missing.date())
    values = series.to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise InvalidInputError(f"{label} values must be finite and nonnegative")
    return series


def ensure_panel(panel: pd.DataFrame, label: str = "query panel") -> pd.DataFrame:
    _check_index(panel, label)
    gap = first_gap(panel.index)
    if gap is not None:
        raise DataGapError(f"{label} is missing {gap.date()}", missing=gap.date())
    if panel.columns.has_duplicates:
        raise InvalidInputError(f"{label} has duplicate query ids")
    return panel


def require_length(obj: pd.Series | pd.DataFrame, minimum: int, label: str) -> None:
    if len(obj) < minimum:
        raise InsufficientDataError(f"{label} needs at least {minimum} entries, got {len(obj)}")


def daily_series(values: object, start: date | str, name: str | None = None) -> pd.Series:
    """Build a contiguous daily series starting at ``start``."""
    values = np.asarray(values, dtype=np.float64)
    index = pd.date_range(as_timestamp(start), periods=len(values), freq="D", name="date")
    return pd.Series(values, index=index, name=name)
