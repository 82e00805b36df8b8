"""Seeded synthetic ILI and query-frequency generator."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import pandas as pd
from scipy.signal import lfilter

from models.data import SyntheticConfig
from models.experiment import SEASON_START

logger = logging.getLogger(__name__)

DISTRACTOR_PERSISTENCE = 0.9


@dataclass(slots=True)
class SyntheticDataset:
    ili: pd.Series
    queries: pd.DataFrame
    latent: pd.Series
    peak_dates: dict[int, pd.Timestamp] = field(default_factory=dict)

    def __iter__(self) -> Iterator[pd.Series | pd.DataFrame]:
        yield self.ili
        yield self.queries


def _latent_ili(config: SyntheticConfig, days: pd.DatetimeIndex, rng: np.random.Generator) -> tuple[np.ndarray, dict[int, pd.Timestamp]]:
    t = np.asarray((days - days[0]).days, dtype=np.float64)
    level = np.full(len(days), config.baseline)
    peaks: dict[int, pd.Timestamp] = {}
    month, day = SEASON_START
    for year in range(days[0].year - 1, days[-1].year + 1):
        offset = config.peak_day_mean + rng.uniform(-config.peak_day_jitter, config.peak_day_jitter)
        peak = pd.Timestamp(year, month, day) + pd.Timedelta(days=float(offset))
        intensity = config.peak_intensity_mean * (1.0 + rng.uniform(-config.peak_intensity_jitter, config.peak_intensity_jitter))
        centre = (peak - days[0]) / pd.Timedelta(days=1)
        level += intensity * np.exp(-0.5 * ((t - centre) / config.peak_width_days) ** 2)
        peaks[year] = peak.normalize()
    return level, peaks


def synthesize(config: SyntheticConfig) -> SyntheticDataset:
    """Weekly ILI rates (weeks ending Sunday) and a daily query panel.

    Each season gets one Gaussian bump with jittered timing and height on
    top of the baseline. Signal queries follow the lagged latent ILI with
    noise; distractors are AR(1) noise plus a weekly cycle.
    """
    rng = np.random.default_rng(config.seed)
    start = pd.Timestamp(config.start_date)
    end = start + pd.DateOffset(years=config.years) - pd.Timedelta(days=1)
    max_lag = max((q.lag for q in config.queries), default=0)
    days = pd.date_range(start - pd.Timedelta(days=max_lag), end, freq="D", name="date")
    latent, peaks = _latent_ili(config, days, rng)
    latent_series = pd.Series(latent, index=days, name="ili_rate")

    # weekly observations: mean of the 7 days ending each Sunday
    sundays = pd.date_range(start + pd.Timedelta(days=6), end, freq="W-SUN", name="date")
    weekly_mean = latent_series.rolling(7).mean().reindex(sundays).to_numpy()
    noise = rng.standard_normal(len(sundays)) * config.noise_scale * (0.2 + 0.05 * weekly_mean)
    ili = pd.Series(np.maximum(weekly_mean + noise, 0.0), index=sundays, name="ili_rate")

    peak_level = config.baseline + config.peak_intensity_mean
    observed_days = days[days >= start]
    columns: dict[str, np.ndarray] = {}
    for query in config.queries:
        n = len(observed_days)
        if query.distractor:
            innovations = rng.standard_normal(n) * query.noise * query.scale * peak_level * np.sqrt(1.0 - DISTRACTOR_PERSISTENCE**2)
            ar = lfilter([1.0], [1.0, -DISTRACTOR_PERSISTENCE], innovations)
            cycle = 0.1 * query.scale * peak_level * np.sin(2.0 * np.pi * np.arange(n) / 7.0)
            values = 0.5 * query.scale * peak_level + ar + cycle
        else:
            lagged = latent_series.shift(query.lag).reindex(observed_days).to_numpy()
            values = query.scale * lagged + rng.standard_normal(n) * query.noise * query.scale * peak_level
        columns[query.query_id] = np.maximum(values, 0.0)
    queries = pd.DataFrame(columns, index=observed_days)

    logger.info(f"Synthesized {len(ili)} weeks of ILI and {len(queries.columns)} queries from seed {config.seed}")
    return SyntheticDataset(
        ili=ili,
        queries=queries,
        latent=latent_series.reindex(observed_days),
        peak_dates={year: peak for year, peak in peaks.items() if start <= peak <= end},
    )
