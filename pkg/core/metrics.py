"""Point and probabilistic scores, calibration and significance testing."""

from __future__ import annotations

import logging
import math
from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from models.metrics import CalibrationCurve, MetricsRow, SignificanceResult

from .errors import InvalidInputError, InvalidParameterError, UndefinedCorrelationError
from .forecasts import ProbabilisticForecast

logger = logging.getLogger(__name__)

SDP_WINDOW = 15
MISCALIBRATION_LEVELS = (0.5, 0.95)
INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


def default_calibration_levels() -> np.ndarray:
    """Two-sided coverage of 0, 0.1, ..., 3 standard deviations."""
    k = np.round(np.arange(0, 31) * 0.1, 10)
    return 2.0 * stats.norm.cdf(k) - 1.0


def _pair(y: object, y_hat: object, minimum: int = 1) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
    if y.shape != y_hat.shape:
        raise InvalidInputError(f"series lengths differ: {y.size} vs {y_hat.size}")
    if y.size < minimum:
        raise InvalidInputError(f"need at least {minimum} points, got {y.size}")
    return y, y_hat


def _sigma(sigma_hat: object, n: int) -> np.ndarray:
    sigma = np.broadcast_to(np.asarray(sigma_hat, dtype=np.float64), (n,))
    if np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
        raise InvalidParameterError("standard deviations must be finite and nonnegative")
    return sigma


# --------------------------------------------------------------------------
# point metrics
# --------------------------------------------------------------------------


class PointMetrics(NamedTuple):
    mae: float
    rmse: float
    smape: float
    r: float


def mae(y: object, y_hat: object) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def rmse(y: object, y_hat: object) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def smape(y: object, y_hat: object) -> float:
    """Symmetric MAPE in percent with a half-sum denominator; 0/0 terms count as 0."""
    y, y_hat = _pair(y, y_hat)
    numerator = np.abs(y - y_hat)
    denominator = (np.abs(y) + np.abs(y_hat)) / 2.0
    terms = np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)
    return float(100.0 * np.mean(terms))


def pearson_r(a: object, b: object) -> float:
    a, b = _pair(a, b, minimum=2)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant series")
    r = float(np.corrcoef(a, b)[0, 1])
    return min(1.0, max(-1.0, r))


def point_metrics(y: object, y_hat: object) -> PointMetrics:
    y, y_hat = _pair(y, y_hat, minimum=2)
    return PointMetrics(mae(y, y_hat), rmse(y, y_hat), smape(y, y_hat), pearson_r(y, y_hat))


def centered_moving_average(values: object, window: int = SDP_WINDOW) -> np.ndarray:
    """Centered moving average; edge windows are truncated and renormalized."""
    values = np.asarray(values, dtype=np.float64)
    if window < 1:
        raise InvalidParameterError(f"window must be positive, got {window}")
    if window > values.size:
        raise InvalidInputError(f"smoothing window {window} is longer than the series ({values.size})")
    kernel = np.ones(window)
    counts = np.convolve(np.ones(values.size), kernel, mode="same")
    return np.convolve(values, kernel, mode="same") / counts


def sdp(y: object, y_hat: object, smooth_window: int = SDP_WINDOW) -> int:
    """Days between the predicted and the true smoothed peak; negative means early.

    Ties go to the earliest day.
    """
    y, y_hat = _pair(y, y_hat)
    true_peak = int(np.argmax(centered_moving_average(y, smooth_window)))
    predicted_peak = int(np.argmax(centered_moving_average(y_hat, smooth_window)))
    return predicted_peak - true_peak


# --------------------------------------------------------------------------
# probabilistic metrics
# --------------------------------------------------------------------------


def crps_gaussian_pointwise(y: object, y_hat: object, sigma_hat: object) -> np.ndarray:
    y, y_hat = _pair(y, y_hat)
    sigma = _sigma(sigma_hat, y.size)
    error = y - y_hat
    positive = sigma > 0
    z = np.divide(error, sigma, out=np.zeros_like(error), where=positive)
    closed = sigma * (z * (2.0 * stats.norm.cdf(z) - 1.0) + 2.0 * stats.norm.pdf(z) - INV_SQRT_PI)
    return np.where(positive, closed, np.abs(error))


def crps_gaussian(y: object, y_hat: object, sigma_hat: object) -> float:
    """Mean CRPS of Gaussian forecasts; equals the MAE where sigma is 0."""
    return float(np.mean(crps_gaussian_pointwise(y, y_hat, sigma_hat)))


def nll_pointwise(y: object, y_hat: object, sigma_hat: object) -> np.ndarray:
    """Gaussian NLL per point; ``inf`` where sigma is 0 and the error is not."""
    y, y_hat = _pair(y, y_hat)
    sigma = _sigma(sigma_hat, y.size)
    error = y - y_hat
    with np.errstate(divide="ignore", invalid="ignore"):
        values = error**2 / (2.0 * sigma**2) + np.log(sigma) + HALF_LOG_TWO_PI
    values = np.where((sigma == 0) & (error == 0), -np.inf, values)
    return np.where((sigma == 0) & (error != 0), np.inf, values)


def nll_metric(y: object, y_hat: object, sigma_hat: object) -> float:
    y, y_hat = _pair(y, y_hat)
    sigma = np.broadcast_to(np.asarray(sigma_hat, dtype=np.float64), y.shape)
    if np.any(sigma <= 0):
        raise InvalidParameterError("predicted standard deviations must be positive")
    return float(np.mean(nll_pointwise(y, y_hat, sigma)))


def tradeoff_sweep(points: int = 101, truth: float = 0.0) -> pd.DataFrame:
    """CRPS and NLL along forecasts moving from (mean -1, std 0) to (mean +1, std 0.5).

    The start is a confident forecast that is off by one: CRPS 1, NLL infinite.
    """
    if points < 2:
        raise InvalidParameterError("the sweep needs at least 2 points")
    mean = np.linspace(-1.0, 1.0, points) + truth
    std = 0.25 * (mean - truth + 1.0)
    y = np.full(points, truth)
    return pd.DataFrame(
        {
            "mean": mean,
            "std": std,
            "crps": crps_gaussian_pointwise(y, mean, std),
            "nll": nll_pointwise(y, mean, std),
        }
    )


# --------------------------------------------------------------------------
# calibration
# --------------------------------------------------------------------------


def calibration_curve(y: object, y_hat: object, sigma_hat: object, levels: Sequence[float] | None = None) -> CalibrationCurve:
    """Fraction of points inside the central interval of each nominal level."""
    y, y_hat = _pair(y, y_hat)
    sigma = _sigma(sigma_hat, y.size)
    levels = default_calibration_levels() if levels is None else np.asarray(levels, dtype=np.float64)
    z = stats.norm.ppf((1.0 + levels) / 2.0)
    error = np.abs(y - y_hat)
    coverage = [float(np.mean(error <= zc * sigma)) for zc in z]
    return CalibrationCurve(levels=[float(c) for c in levels], coverage=coverage)


def average_calibration(curves: Sequence[CalibrationCurve]) -> CalibrationCurve:
    if not curves:
        raise InvalidInputError("no calibration curves to average")
    levels = curves[0].levels
    if any(curve.levels != levels for curve in curves):
        raise InvalidInputError("calibration curves use different levels")
    coverage = np.array([curve.coverage for curve in curves])
    return CalibrationCurve(
        levels=levels,
        coverage=coverage.mean(axis=0).tolist(),
        coverage_std=coverage.std(axis=0).tolist(),
    )


def calibration_error(curve: CalibrationCurve, levels: Sequence[float] = MISCALIBRATION_LEVELS) -> float:
    """Mean absolute gap between coverage and nominal level, interpolated at ``levels``."""
    coverage = np.interp(levels, curve.levels, curve.coverage)
    return float(np.mean(np.abs(coverage - np.asarray(levels))))


# --------------------------------------------------------------------------
# significance and aggregation
# --------------------------------------------------------------------------


def significance(
    samples_a: Sequence[float],
    samples_b: Sequence[float],
    alpha: float = 0.05,
    num_comparisons: int = 1,
    *,
    model_a: str = "a",
    model_b: str = "b",
    metric: str = "crps",
    gamma: int | None = None,
) -> SignificanceResult:
    """Two-tailed Welch t-test with a Bonferroni-corrected threshold."""
    a = np.asarray(samples_a, dtype=np.float64)
    b = np.asarray(samples_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise InvalidInputError("significance testing needs at least 2 samples per model")
    if num_comparisons < 1:
        raise InvalidParameterError(f"num_comparisons must be at least 1, got {num_comparisons}")
    threshold = alpha / num_comparisons

    if np.var(a) == 0 and np.var(b) == 0:
        difference = float(a.mean() - b.mean())
        statistic = 0.0 if difference == 0 else math.copysign(math.inf, difference)
        p_value = 1.0 if difference == 0 else 0.0
    else:
        result = stats.ttest_ind(a, b, equal_var=False)
        statistic = float(result.statistic)
        p_value = float(result.pvalue)
        if math.isnan(p_value):
            p_value = 1.0
    return SignificanceResult(
        model_a=model_a,
        model_b=model_b,
        gamma=gamma,
        metric=metric,
        statistic=statistic,
        p_value=min(1.0, max(0.0, p_value)),
        threshold=threshold,
        significant=p_value <= threshold,
    )


def score_forecast(forecast: ProbabilisticForecast, *, season: int | None = None, gamma: int | None = None) -> MetricsRow:
    """All metrics of one forecast against its stored truth."""
    if forecast.truth is None or np.isnan(forecast.truth).any():
        raise InvalidInputError(f"forecast {forecast.model!r} lacks ground truth for some dates")
    y, y_hat = _pair(forecast.truth, forecast.mean, minimum=2)
    try:
        r: float | None = pearson_r(y, y_hat)
    except UndefinedCorrelationError:
        logger.warning(f"Correlation undefined for {forecast.model}: constant series")
        r = None
    shift: float | None = None
    if y.size >= SDP_WINDOW:
        shift = float(sdp(y, y_hat))
    else:
        logger.warning(f"SDP undefined for {forecast.model}: {y.size} days is shorter than the {SDP_WINDOW}-day smoothing window")
    crps = nll = None
    if forecast.std is not None:
        crps = crps_gaussian(y, y_hat, forecast.std)
        nll = nll_metric(y, y_hat, forecast.std)
    return MetricsRow(
        model=forecast.model,
        gamma=gamma if gamma is not None else (forecast.gamma or 1),
        season=season,
        crps=crps,
        nll=nll,
        mae=mae(y, y_hat),
        rmse=rmse(y, y_hat),
        smape=smape(y, y_hat),
        r=r,
        sdp=shift,
    )


def _mean_or_none(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    if len(present) != len(values):
        logger.warning(f"Averaging {len(present)} of {len(values)} values; the rest are undefined")
    return float(np.mean(present))


def aggregate_report(rows: Sequence[MetricsRow]) -> MetricsRow:
    """Mean of each metric across seasons; SDP is averaged in absolute value."""
    if not rows:
        raise InvalidInputError("nothing to aggregate")
    if len({row.gamma for row in rows}) != 1:
        raise InvalidInputError("cannot aggregate rows with different horizons")
    if len({row.model for row in rows}) != 1:
        raise InvalidInputError("cannot aggregate rows from different models")
    return MetricsRow(
        model=rows[0].model,
        gamma=rows[0].gamma,
        season=None,
        crps=_mean_or_none([row.crps for row in rows]),
        nll=_mean_or_none([row.nll for row in rows]),
        mae=float(np.mean([row.mae for row in rows])),
        rmse=float(np.mean([row.rmse for row in rows])),
        smape=float(np.mean([row.smape for row in rows])),
        r=_mean_or_none([row.r for row in rows]),
        sdp=_mean_or_none([None if row.sdp is None else abs(row.sdp) for row in rows]),
    )
