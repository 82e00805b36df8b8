from __future__ import annotations

from datetime import date

import numpy as np
import pandas as pd
import pytest

from core.errors import InsufficientDataError, NotPositiveDefiniteError
from core.gp import (
    AMPLITUDE_BOUNDS,
    LENGTHSCALE_BOUNDS,
    GaussianProcess,
    cholesky_with_jitter,
    fit_gaussian_process,
    gp_forecast,
    retrain_anchor,
    se_kernel,
)
from core.networks import build_model
from core.series import daily_series
from models import ForecasterSpec


def test_se_kernel_values() -> None:
    K = se_kernel(np.array([0.0, 1.0]), np.array([0.0, 1.0]), lengthscale=1.0, amplitude=1.0)
    np.testing.assert_allclose(K, [[1.0, 0.60653], [0.60653, 1.0]], atol=1e-5)
    assert se_kernel(np.array([0.0]), np.array([2.0]), 2.0, 3.0)[0, 0] == pytest.approx(9.0 * np.exp(-0.5))


def test_exact_interpolation_at_training_points() -> None:
    x = np.arange(5.0)
    y = np.sin(x)
    gp = GaussianProcess(lengthscale=2.0, amplitude=1.0, noise=1e-3).fit(x, y)
    mean, std = gp.predict(x)
    np.testing.assert_allclose(mean, y, atol=1e-2)
    assert np.all(std < 1e-2)


def test_reverts_to_the_prior_far_from_data() -> None:
    gp = GaussianProcess(lengthscale=2.0, amplitude=1.5, noise=0.1, mean=4.0).fit([0.0, 1.0, 2.0], [5.0, 6.0, 5.5])
    mean, std = gp.predict([1000.0])
    assert mean[0] == pytest.approx(4.0)
    assert std[0] == pytest.approx(1.5)
    _, noisy = gp.predict([1000.0], include_noise=True)
    assert noisy[0] == pytest.approx(np.sqrt(1.5**2 + 0.1**2))


def test_predict_needs_a_fit() -> None:
    with pytest.raises(InsufficientDataError):
        GaussianProcess(lengthscale=1.0, amplitude=1.0, noise=0.1).predict([0.0])
    with pytest.raises(InsufficientDataError):
        GaussianProcess(lengthscale=1.0, amplitude=1.0, noise=0.1).fit([], [])


def test_cholesky_jitter_rescues_singular_matrices() -> None:
    K = np.ones((3, 3))
    L = cholesky_with_jitter(K)
    np.testing.assert_allclose(L @ L.T, K, atol=1e-4)
    with pytest.raises(NotPositiveDefiniteError):
        cholesky_with_jitter(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_hyperparameter_fit_on_a_smooth_curve() -> None:
    x = np.arange(0.0, 60.0)
    y = 10.0 + 3.0 * np.sin(2 * np.pi * x / 60.0)
    gp = fit_gaussian_process(x, y)
    assert LENGTHSCALE_BOUNDS[0] <= gp.lengthscale <= LENGTHSCALE_BOUNDS[1]
    assert gp.amplitude >= AMPLITUDE_BOUNDS[0]
    mean, std = gp.predict([30.5])
    assert mean[0] == pytest.approx(10.0 + 3.0 * np.sin(2 * np.pi * 30.5 / 60.0), abs=0.1)
    assert np.isfinite(gp.log_marginal_likelihood(y))


def test_fit_on_a_constant_series() -> None:
    gp = fit_gaussian_process(np.arange(10.0), np.full(10, 2.0))
    mean, std = gp.predict([12.0], include_noise=True)
    assert mean[0] == pytest.approx(2.0, abs=1e-3)
    assert std[0] > 0


def test_gp_forecast_continues_a_trend() -> None:
    window = daily_series(np.linspace(1.0, 2.0, 30), "2020-01-01")
    mean, std = gp_forecast(window, date(2020, 1, 30), gamma=1)
    assert 1.9 < mean < 2.2
    assert std > 0
    with pytest.raises(InsufficientDataError):
        gp_forecast(window.iloc[:0], date(2020, 1, 30), gamma=1)


@pytest.mark.parametrize(
    ("origin", "anchor"),
    [("2020-01-02", "2020-01-02"), ("2020-01-03", "2020-01-02"), ("2020-01-08", "2020-01-02"), ("2020-01-09", "2020-01-09")],
)
def test_retrain_anchor_is_the_previous_thursday(origin: str, anchor: str) -> None:
    assert retrain_anchor(pd.Timestamp(origin)) == pd.Timestamp(anchor)


@pytest.fixture
def seasonal_ili() -> pd.Series:
    t = np.arange(400.0)
    return daily_series(5.0 + 3.0 * np.sin(2 * np.pi * t / 365.0), "2019-01-01", name="ili_rate")


def test_forecaster_refits_weekly(seasonal_ili: pd.Series) -> None:
    model = build_model(ForecasterSpec.parse("gp", gamma=7, gp_window=60))
    origins = pd.date_range("2019-12-06", "2019-12-12", freq="D")
    forecast = model.forecast(seasonal_ili, origins, delay=7)
    assert len(model.fits) == 2
    assert forecast.model == "gp" and forecast.gamma == 7
    assert forecast.dates[0] == pd.Timestamp("2019-12-13")
    assert np.all(forecast.std > 0)
    np.testing.assert_allclose(forecast.mean, seasonal_ili.reindex(forecast.dates).to_numpy(), atol=1.0)


def test_forecaster_ignores_unpublished_data(seasonal_ili: pd.Series) -> None:
    spec = ForecasterSpec.parse("gp", gamma=14, gp_window=60)
    origins = [date(2019, 12, 5)]
    clean = build_model(spec).forecast(seasonal_ili, origins, delay=7)
    tampered = seasonal_ili.copy()
    tampered.loc["2019-11-29":] = 100.0
    leaked = build_model(spec).forecast(tampered, origins, delay=7)
    np.testing.assert_array_equal(clean.mean, leaked.mean)
    np.testing.assert_array_equal(clean.std, leaked.std)
