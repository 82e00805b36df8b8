"""Weekly-to-daily interpolation, query smoothing, normalization and selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Any

import numpy as np
import pandas as pd

from .errors import ConstantSeriesError, InsufficientDataError, InvalidInputError, UndefinedCorrelationError
from .metrics import pearson_r
from .series import DAY, as_timestamp, ensure_daily, ensure_panel, ensure_weekly, require_length

logger = logging.getLogger(__name__)

THURSDAY = 3
SMOOTHING_WINDOW = 7
SELECTION_THRESHOLD = 0.3


def week_thursday(week_end: pd.Timestamp) -> pd.Timestamp:
    """Thursday of the week ending on ``week_end``."""
    return week_end - pd.Timedelta(days=(week_end.weekday() - THURSDAY) % 7)


def weekly_to_daily(weekly: pd.Series) -> pd.Series:
    """Linear interpolation between the Thursdays of consecutive weeks.

    The output covers every day from the first week's first day to the last
    week-ending date; days outside the Thursday anchors keep the nearest
    anchor's value.
    """
    ensure_weekly(weekly, "weekly ILI series")
    if len(weekly) < 2:
        raise InsufficientDataError("weekly_to_daily needs at least 2 weeks")
    anchors = pd.DatetimeIndex([week_thursday(d) for d in weekly.index])
    days = pd.date_range(weekly.index[0] - pd.Timedelta(days=6), weekly.index[-1], freq="D", name="date")
    origin = days[0]
    x = np.asarray((days - origin).days, dtype=np.float64)
    xp = np.asarray((anchors - origin).days, dtype=np.float64)
    values = np.interp(x, xp, weekly.to_numpy(dtype=np.float64))
    return pd.Series(values, index=days, name=weekly.name)


def harmonic_weights(window: int = SMOOTHING_WINDOW) -> np.ndarray:
    weights = 1.0 / np.arange(1, window + 1)
    return weights / weights.sum()


def harmonic_smooth(data: pd.Series | pd.DataFrame, window: int = SMOOTHING_WINDOW) -> pd.Series | pd.DataFrame:
    """Trailing average with weights ``1/(lag+1)`` over the past ``window`` days.

    The first ``window - 1`` days use the available lags with the weights
    renormalized. Works column-wise on a query panel.
    """
    if window < 1:
        raise InvalidInputError(f"window must be positive, got {window}")
    require_length(data, window, "series to smooth")
    raw = 1.0 / np.arange(1, window + 1)
    n = len(data)
    denominator = np.convolve(np.ones(n), raw)[:n]

    def smooth(values: np.ndarray) -> np.ndarray:
        return np.convolve(values, raw)[:n] / denominator

    if isinstance(data, pd.DataFrame):
        out = np.column_stack([smooth(data[c].to_numpy(dtype=np.float64)) for c in data.columns]) if len(data.columns) else np.empty((n, 0))
        return pd.DataFrame(out, index=data.index, columns=data.columns)
    return pd.Series(smooth(data.to_numpy(dtype=np.float64)), index=data.index, name=data.name)


@dataclass(slots=True)
class MinMaxStats:
    minimum: float
    maximum: float

    def apply(self, values: pd.Series) -> pd.Series:
        return (values - self.minimum) / (self.maximum - self.minimum)


def minmax_normalize(series: pd.Series, fit_end: date | pd.Timestamp) -> tuple[pd.Series, MinMaxStats]:
    """Scale with the min/max of the entries dated on or before ``fit_end``."""
    fit = series.loc[: as_timestamp(fit_end)]
    if fit.empty:
        raise InvalidInputError(f"no data on or before {fit_end} to fit normalization")
    stats = MinMaxStats(float(fit.min()), float(fit.max()))
    if stats.maximum == stats.minimum:
        raise ConstantSeriesError(f"query {series.name!r} is constant over the fit period")
    return stats.apply(series), stats


def select_queries(
    panel: pd.DataFrame,
    ili: pd.Series,
    train_period: tuple[date | pd.Timestamp, date | pd.Timestamp],
    threshold: float = SELECTION_THRESHOLD,
) -> tuple[pd.DataFrame, dict[str, float]]:
    """Keep queries whose Pearson r with ILI over ``train_period`` is at least ``threshold``.

    Columns come back ordered by descending r, ties by query id.
    """
    start, end = (as_timestamp(d) for d in train_period)
    window_ili = ili.loc[start:end]
    window = panel.loc[start:end].reindex(window_ili.index)
    correlations: dict[str, float] = {}
    for query in panel.columns:
        values = window[query]
        if values.isna().any():
            continue
        try:
            r = pearson_r(window_ili.to_numpy(), values.to_numpy())
        except UndefinedCorrelationError:
            logger.debug(f"Query {query!r} is constant over the training period; skipped")
            continue
        if r >= threshold:
            correlations[str(query)] = r
    ordered = sorted(correlations, key=lambda q: (-correlations[q], q))
    if not ordered:
        logger.warning(f"No query reaches correlation {threshold} between {start.date()} and {end.date()}")
    return panel[ordered], {q: correlations[q] for q in ordered}


@dataclass(slots=True)
class PreprocessingState:
    """Everything fit on the training period that prediction must reapply."""

    fit_end: date
    selected: list[str] = field(default_factory=list)
    correlations: dict[str, float] = field(default_factory=dict)
    stats: dict[str, MinMaxStats] = field(default_factory=dict)
    dropped: list[str] = field(default_factory=list)
    smooth_before_normalize: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "fit_end": self.fit_end.isoformat(),
            "selected": list(self.selected),
            "correlations": dict(self.correlations),
            "stats": {q: [s.minimum, s.maximum] for q, s in self.stats.items()},
            "dropped": list(self.dropped),
            "smooth_before_normalize": self.smooth_before_normalize,
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "PreprocessingState":
        return cls(
            fit_end=date.fromisoformat(payload["fit_end"]),
            selected=list(payload.get("selected", [])),
            correlations={q: float(r) for q, r in payload.get("correlations", {}).items()},
            stats={q: MinMaxStats(float(lo), float(hi)) for q, (lo, hi) in payload.get("stats", {}).items()},
            dropped=list(payload.get("dropped", [])),
            smooth_before_normalize=bool(payload.get("smooth_before_normalize", True)),
        )

    def transform(self, panel: pd.DataFrame) -> pd.DataFrame:
        """Reapply smoothing and the stored min-max statistics to ``panel``."""
        missing = [q for q in self.selected if q not in panel.columns]
        if missing:
            raise InvalidInputError(f"query panel lacks selected queries {missing}")
        data = panel[self.selected]
        if self.smooth_before_normalize:
            data = harmonic_smooth(data)
        normalized = pd.DataFrame({q: self.stats[q].apply(data[q]) for q in self.selected}, index=data.index)
        if not self.smooth_before_normalize:
            normalized = harmonic_smooth(normalized)
        return normalized.reindex(columns=self.selected)


def fit_preprocessing(
    ili_daily: pd.Series,
    panel: pd.DataFrame,
    fit_start: date | pd.Timestamp,
    fit_end: date | pd.Timestamp,
    *,
    threshold: float = SELECTION_THRESHOLD,
    smooth_before_normalize: bool = True,
) -> tuple[pd.DataFrame, PreprocessingState]:
    """Select and normalize queries with statistics from ``[fit_start, fit_end]`` only.

    Correlation is unaffected by min-max scaling, so selection runs on the
    smoothed raw frequencies and normalization is fit for the survivors.
    Queries constant over the fit period are dropped with a warning.
    """
    ensure_daily(ili_daily, "daily ILI series")
    ensure_panel(panel)
    fit_start, fit_end = as_timestamp(fit_start), as_timestamp(fit_end)
    smoothed = harmonic_smooth(panel) if len(panel.columns) else panel

    dropped: list[str] = []
    stats: dict[str, MinMaxStats] = {}
    candidates = smoothed if smooth_before_normalize else panel
    for query in panel.columns:
        fit = candidates[query].loc[fit_start:fit_end]
        try:
            _, stats[query] = minmax_normalize(fit, fit_end)
        except ConstantSeriesError:
            dropped.append(query)
            logger.warning(f"Dropping query {query!r}: constant between {fit_start.date()} and {fit_end.date()}")
    usable = [q for q in panel.columns if q not in dropped]

    if smooth_before_normalize or not usable:
        selection_input = smoothed[usable]
    else:
        normalized = pd.DataFrame({q: stats[q].apply(panel[q]) for q in usable}, index=panel.index)
        selection_input = harmonic_smooth(normalized)
    _, correlations = select_queries(selection_input, ili_daily, (fit_start, fit_end), threshold)

    state = PreprocessingState(
        fit_end=fit_end.date(),
        selected=list(correlations),
        correlations=correlations,
        stats={q: stats[q] for q in correlations},
        dropped=dropped,
        smooth_before_normalize=smooth_before_normalize,
    )
    logger.info(f"Selected {len(state.selected)} of {len(panel.columns)} queries with data up to {fit_end.date()}")
    return state.transform(panel), state
