"""Gaussian-process regression baseline on the ILI rate alone.

A squared-exponential kernel plus observation noise is fit to the trailing
window of daily ILI rates by maximising the log marginal likelihood. The
forecaster refits once per week, on the Thursday on or before each origin.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable

import numpy as np
import pandas as pd
from scipy import linalg, optimize

from models.forecaster import ForecasterSpec

from .autodiff import Parameter
from .errors import InsufficientDataError, NotPositiveDefiniteError
from .forecasts import ProbabilisticForecast
from .series import as_timestamp

logger = logging.getLogger(__name__)

RETRAIN_WEEKDAY = 3  # Thursday
LENGTHSCALE_BOUNDS = (1.0, 2000.0)
AMPLITUDE_BOUNDS = (1e-3, 1e3)
NOISE_BOUNDS = (1e-4, 10.0)
JITTER_START = 1e-10
JITTER_ATTEMPTS = 8


def se_kernel(a: np.ndarray, b: np.ndarray, lengthscale: float, amplitude: float) -> np.ndarray:
    """``amplitude² · exp(-½ (a - b)² / lengthscale²)`` for every pair."""
    d = np.subtract.outer(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    return amplitude**2 * np.exp(-0.5 * (d / lengthscale) ** 2)


def cholesky_with_jitter(K: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, adding growing diagonal jitter on failure."""
    try:
        return linalg.cholesky(K, lower=True)
    except linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(K))) or 1.0
    jitter = JITTER_START * scale
    for _ in range(JITTER_ATTEMPTS):
        try:
            L = linalg.cholesky(K + jitter * np.eye(len(K)), lower=True)
        except linalg.LinAlgError:
            jitter *= 10.0
            continue
        logger.debug(f"Cholesky needed jitter {jitter:.2e}")
        return L
    raise NotPositiveDefiniteError(f"kernel matrix of size {len(K)} is not positive definite even with jitter {jitter / 10.0:.2e}")


@dataclass(slots=True)
class GaussianProcess:
    """A fitted or fittable GP with a constant prior mean."""

    lengthscale: float
    amplitude: float
    noise: float
    mean: float = 0.0
    x_train: np.ndarray | None = field(default=None, init=False, repr=False)
    chol: np.ndarray | None = field(default=None, init=False, repr=False)
    alpha: np.ndarray | None = field(default=None, init=False, repr=False)

    def covariance(self, x: np.ndarray) -> np.ndarray:
        K = se_kernel(x, x, self.lengthscale, self.amplitude)
        K[np.diag_indices_from(K)] += self.noise**2
        return K

    def fit(self, x: object, y: object) -> "GaussianProcess":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.size == 0:
            raise InsufficientDataError("Gaussian process needs at least one observation")
        self.x_train = x
        self.chol = cholesky_with_jitter(self.covariance(x))
        self.alpha = linalg.cho_solve((self.chol, True), y - self.mean)
        return self

    def predict(self, x: object, *, include_noise: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Predictive mean and std at ``x``; variance is clipped at zero."""
        if self.chol is None:
            raise InsufficientDataError("Gaussian process has not been fit")
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        K_star = se_kernel(self.x_train, x, self.lengthscale, self.amplitude)
        mean = self.mean + K_star.T @ self.alpha
        v = linalg.solve_triangular(self.chol, K_star, lower=True)
        variance = self.amplitude**2 - np.sum(v**2, axis=0)
        if include_noise:
            variance = variance + self.noise**2
        return mean, np.sqrt(np.clip(variance, 0.0, None))

    def log_marginal_likelihood(self, y: object) -> float:
        y = np.asarray(y, dtype=np.float64) - self.mean
        return float(-0.5 * y @ self.alpha - np.sum(np.log(np.diag(self.chol))) - 0.5 * len(y) * math.log(2 * math.pi))


def _negative_lml(log_params: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    lengthscale, amplitude, noise = np.exp(log_params)
    se = se_kernel(x, x, lengthscale, amplitude)
    K = se + noise**2 * np.eye(len(x))
    try:
        L = cholesky_with_jitter(K)
    except NotPositiveDefiniteError:
        return 1e25, np.zeros(3)
    alpha = linalg.cho_solve((L, True), y)
    nll = 0.5 * y @ alpha + np.sum(np.log(np.diag(L))) + 0.5 * len(y) * math.log(2 * math.pi)
    inner = np.outer(alpha, alpha) - linalg.cho_solve((L, True), np.eye(len(x)))
    d2 = np.subtract.outer(x, x) ** 2
    derivatives = (
        se * d2 / lengthscale**2,
        2.0 * se,
        2.0 * noise**2 * np.eye(len(x)),
    )
    gradient = np.array([-0.5 * np.sum(inner * dK) for dK in derivatives])
    return float(nll), gradient


def fit_gaussian_process(x: object, y: object) -> GaussianProcess:
    """Fit kernel hyperparameters by L-BFGS-B on the log marginal likelihood.

    Targets are standardised for the search; the returned process works in
    the original units with the sample mean as its prior mean.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0:
        raise InsufficientDataError("Gaussian process needs at least one observation")
    offset = float(y.mean())
    scale = float(y.std()) or 1.0
    standardised = (y - offset) / scale

    span = float(np.ptp(x)) if x.size > 1 else LENGTHSCALE_BOUNDS[0]
    start = np.log([np.clip(span / 4.0, *LENGTHSCALE_BOUNDS), 1.0, 0.1])
    bounds = [tuple(np.log(b)) for b in (LENGTHSCALE_BOUNDS, AMPLITUDE_BOUNDS, NOISE_BOUNDS)]
    result = optimize.minimize(_negative_lml, start, args=(x, standardised), jac=True, method="L-BFGS-B", bounds=bounds)
    if not result.success:
        logger.debug(f"GP hyperparameter search stopped early: {result.message}")
    lengthscale, amplitude, noise = np.exp(result.x)
    gp = GaussianProcess(
        lengthscale=float(lengthscale),
        amplitude=float(amplitude * scale),
        noise=float(noise * scale),
        mean=offset,
    )
    return gp.fit(x, y)


def _day_offsets(index: pd.DatetimeIndex, reference: pd.Timestamp) -> np.ndarray:
    return np.asarray((index - reference).days, dtype=np.float64)


def gp_forecast(window: pd.Series, origin_date: date | pd.Timestamp, gamma: int) -> tuple[float, float]:
    """Fit on ``window`` and return the predictive mean and std of ILI at ``origin + gamma``."""
    if window.empty:
        raise InsufficientDataError("GP window is empty")
    origin = as_timestamp(origin_date)
    gp = fit_gaussian_process(_day_offsets(window.index, origin), window.to_numpy(dtype=np.float64))
    mean, std = gp.predict([float(gamma)], include_noise=True)
    return float(mean[0]), float(std[0])


def retrain_anchor(origin: pd.Timestamp) -> pd.Timestamp:
    """The Thursday on or before ``origin``."""
    return origin - pd.Timedelta(days=(origin.weekday() - RETRAIN_WEEKDAY) % 7)


@dataclass(slots=True)
class GaussianProcessForecaster:
    """Weekly-refit GP; uses no query data."""

    spec: ForecasterSpec
    fits: dict[pd.Timestamp, tuple[GaussianProcess, pd.Timestamp]] = field(default_factory=dict, repr=False)

    def parameters(self) -> list[Parameter]:
        return []

    def _fit_for(self, ili: pd.Series, anchor: pd.Timestamp, delay: int) -> tuple[GaussianProcess, pd.Timestamp]:
        if anchor not in self.fits:
            end = anchor - pd.Timedelta(days=delay)
            window = ili.loc[end - pd.Timedelta(days=self.spec.gp_window - 1) : end]
            if window.empty:
                raise InsufficientDataError(f"no ILI data in the GP window ending {end.date()}")
            gp = fit_gaussian_process(_day_offsets(window.index, end), window.to_numpy(dtype=np.float64))
            logger.debug(f"GP refit on {len(window)} days ending {end.date()}: lengthscale {gp.lengthscale:.1f}")
            self.fits[anchor] = (gp, end)
        return self.fits[anchor]

    def forecast(self, ili: pd.Series, origins: Iterable[date], delay: int) -> ProbabilisticForecast:
        origins = pd.DatetimeIndex([as_timestamp(o) for o in origins], name="date")
        targets = origins + pd.Timedelta(days=self.spec.gamma)
        means, stds = np.empty(len(origins)), np.empty(len(origins))
        for i, (origin, target) in enumerate(zip(origins, targets)):
            gp, end = self._fit_for(ili, retrain_anchor(origin), delay)
            mean, std = gp.predict([float((target - end).days)], include_noise=True)
            means[i], stds[i] = mean[0], std[0]
        return ProbabilisticForecast(dates=targets, mean=means, std=stds, model="gp", gamma=self.spec.gamma)
