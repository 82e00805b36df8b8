"""Rolling-window supervised datasets."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataGapError, InvalidInputError, ShapeError
from .series import DAY, as_timestamp


@dataclass(slots=True)
class WindowedDataset:
    """Samples ``x`` of shape ``(m + 1, lag)`` with the ILI row last.

    ``origins[i]`` is the forecast origin ``t`` of sample ``i``; its target
    ``y[i]`` is the ILI rate at ``t + gamma`` (NaN when unknown).
    """

    X: np.ndarray
    y: np.ndarray
    origins: pd.DatetimeIndex
    lag: int
    delay: int
    gamma: int
    query_ids: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.X.ndim != 3 or self.X.shape[0] != len(self.y) or len(self.origins) != len(self.y):
            raise ShapeError(f"inconsistent dataset shapes X={self.X.shape}, y={self.y.shape}, origins={len(self.origins)}")
        if self.X.shape[1] != len(self.query_ids) + 1 or self.X.shape[2] != self.lag:
            raise ShapeError(f"samples of shape {self.X.shape[1:]} do not match {len(self.query_ids)} queries and lag {self.lag}")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def input_dims(self) -> tuple[int, int]:
        return self.X.shape[1], self.X.shape[2]

    @property
    def target_dates(self) -> pd.DatetimeIndex:
        return self.origins + pd.Timedelta(days=self.gamma)

    def ili_only(self) -> "WindowedDataset":
        """The same samples with the query rows removed."""
        return WindowedDataset(
            X=self.X[:, -1:, :].copy(),
            y=self.y,
            origins=self.origins,
            lag=self.lag,
            delay=self.delay,
            gamma=self.gamma,
        )

    def source_dates(self, i: int) -> tuple[pd.DatetimeIndex, pd.DatetimeIndex, pd.Timestamp]:
        """Dates read by sample ``i``: query days, ILI days and the target day."""
        t = self.origins[i]
        query_days = pd.date_range(t - (self.lag - 1) * DAY, t, freq="D")
        ili_end = t - self.delay * DAY
        ili_days = pd.date_range(ili_end - (self.lag - 1) * DAY, ili_end, freq="D")
        return query_days, ili_days, t + self.gamma * DAY


def _covering(data: pd.Series | pd.DataFrame, start: pd.Timestamp, end: pd.Timestamp, label: str) -> np.ndarray:
    days = pd.date_range(start, end, freq="D")
    aligned = data.reindex(days)
    missing = aligned.isna()
    if isinstance(missing, pd.DataFrame):
        missing = missing.any(axis=1)
    if missing.any():
        first = days[int(np.argmax(missing.to_numpy()))]
        raise DataGapError(f"{label} does not cover {first.date()}", missing=first.date())
    return aligned.to_numpy(dtype=np.float64)


def build_windows(
    ili: pd.Series,
    panel: pd.DataFrame,
    lag: int,
    delay: int,
    gamma: int,
    period: tuple[date | pd.Timestamp, date | pd.Timestamp],
    *,
    require_targets: bool = True,
) -> WindowedDataset:
    """One sample per day ``t`` of ``period`` (inclusive).

    Query rows cover ``t - lag + 1 .. t``, the ILI row covers
    ``t - delay - lag + 1 .. t - delay``, and the target is ``ILI(t + gamma)``.
    """
    if lag < 1 or delay < 0 or gamma < 1:
        raise InvalidInputError(f"need lag >= 1, delay >= 0 and gamma >= 1; got {lag}, {delay}, {gamma}")
    start, end = (as_timestamp(d) for d in period)
    if end < start:
        raise InvalidInputError(f"period ends ({end.date()}) before it starts ({start.date()})")
    n = (end - start).days + 1
    lead = (lag - 1) * DAY

    queries = _covering(panel, start - lead, end, "query panel") if len(panel.columns) else np.empty((n + lag - 1, 0))
    ili_rows = _covering(ili, start - delay * DAY - lead, end - delay * DAY, "ILI series")

    query_windows = sliding_window_view(queries, lag, axis=0)
    ili_windows = sliding_window_view(ili_rows, lag)[:, None, :]
    X = np.concatenate([query_windows, ili_windows], axis=1)

    target_start, target_end = start + gamma * DAY, end + gamma * DAY
    if require_targets:
        y = _covering(ili, target_start, target_end, "ILI series")
    else:
        y = ili.reindex(pd.date_range(target_start, target_end, freq="D")).to_numpy(dtype=np.float64)

    return WindowedDataset(
        X=np.ascontiguousarray(X),
        y=y,
        origins=pd.date_range(start, end, freq="D", name="date"),
        lag=lag,
        delay=delay,
        gamma=gamma,
        query_ids=[str(q) for q in panel.columns],
    )


def flatten_column_major(x: object) -> np.ndarray:
    return np.asarray(x).ravel(order="F")
