from __future__ import annotations

from datetime import date

import numpy as np
import pandas as pd
import pytest

from core.errors import ConstantSeriesError, DataGapError, InsufficientDataError, InvalidInputError
from core.preprocessing import (
    PreprocessingState,
    fit_preprocessing,
    harmonic_smooth,
    harmonic_weights,
    minmax_normalize,
    select_queries,
    weekly_to_daily,
)
from core.series import daily_series
from core.synthetic import synthesize
from models import SyntheticConfig


def _weekly(values: list[float], first: str) -> pd.Series:
    index = pd.date_range(first, periods=len(values), freq="7D", name="date")
    return pd.Series(values, index=index, name="ili_rate")


def test_weekly_to_daily_interpolates_between_thursdays() -> None:
    daily = weekly_to_daily(_weekly([7.0, 14.0], "2016-01-09"))
    assert daily.index[0] == pd.Timestamp("2016-01-03")
    assert daily.index[-1] == pd.Timestamp("2016-01-16")
    assert daily[pd.Timestamp("2016-01-07")] == pytest.approx(7.0)
    assert daily[pd.Timestamp("2016-01-08")] == pytest.approx(8.0)
    assert daily[pd.Timestamp("2016-01-13")] == pytest.approx(13.0)
    assert daily[pd.Timestamp("2016-01-14")] == pytest.approx(14.0)


def test_weekly_to_daily_holds_the_edges() -> None:
    daily = weekly_to_daily(_weekly([7.0, 14.0], "2016-01-09"))
    assert daily[pd.Timestamp("2016-01-03")] == pytest.approx(7.0)
    assert daily[pd.Timestamp("2016-01-16")] == pytest.approx(14.0)


def test_weekly_to_daily_rejects_short_and_gapped_input() -> None:
    with pytest.raises(InsufficientDataError):
        weekly_to_daily(_weekly([3.0], "2016-01-09"))
    gapped = _weekly([1.0, 2.0, 3.0], "2016-01-09").drop(pd.Timestamp("2016-01-16"))
    with pytest.raises(DataGapError):
        weekly_to_daily(gapped)


def test_harmonic_weights_sum_to_one() -> None:
    weights = harmonic_weights()
    assert weights.sum() == pytest.approx(1.0)
    assert weights[0] == pytest.approx(0.38568, abs=1e-5)


def test_harmonic_smooth_of_an_impulse() -> None:
    values = np.zeros(20)
    values[10] = 1.0
    smoothed = harmonic_smooth(daily_series(values, "2020-01-01"))
    assert smoothed.iloc[10] == pytest.approx(0.38568, abs=1e-5)
    assert smoothed.iloc[13] == pytest.approx(0.09642, abs=1e-5)
    assert smoothed.iloc[9] == 0.0
    assert smoothed.iloc[17] == 0.0


def test_harmonic_smooth_keeps_constants_at_the_start() -> None:
    smoothed = harmonic_smooth(daily_series(np.full(10, 4.0), "2020-01-01"))
    np.testing.assert_allclose(smoothed.to_numpy(), np.full(10, 4.0))


def test_harmonic_smooth_needs_a_full_window() -> None:
    with pytest.raises(InsufficientDataError):
        harmonic_smooth(daily_series(np.ones(6), "2020-01-01"))


def test_minmax_uses_the_fit_period_only() -> None:
    series = daily_series([0.0, 10.0, 5.0, 12.0], "2020-01-01", name="q")
    scaled, stats = minmax_normalize(series, date(2020, 1, 2))
    assert (stats.minimum, stats.maximum) == (0.0, 10.0)
    assert scaled.iloc[2] == pytest.approx(0.5)
    assert scaled.iloc[3] == pytest.approx(1.2)


def test_minmax_rejects_constant_and_empty_fits() -> None:
    series = daily_series([3.0, 3.0, 9.0], "2020-01-01", name="q")
    with pytest.raises(ConstantSeriesError):
        minmax_normalize(series, date(2020, 1, 2))
    with pytest.raises(InvalidInputError):
        minmax_normalize(series, date(2019, 12, 1))


def _sine_panel() -> tuple[pd.Series, pd.DataFrame]:
    k = np.arange(100)
    ili = daily_series(np.sin(2 * np.pi * k / 50), "2020-01-01", name="ili_rate")
    cos = np.cos(2 * np.pi * k / 50)
    panel = pd.DataFrame(
        {
            "orthogonal": cos,
            "half": ili.to_numpy() + 0.5 * cos,
            "anti": -ili.to_numpy(),
            "copy": 3.0 * ili.to_numpy() + 1.0,
        },
        index=ili.index,
    )
    return ili, panel


def test_select_queries_keeps_correlated_columns_in_order() -> None:
    ili, panel = _sine_panel()
    selected, correlations = select_queries(panel, ili, (ili.index[0], ili.index[-1]))
    assert list(selected.columns) == ["copy", "half"]
    assert correlations["copy"] == pytest.approx(1.0)
    assert correlations["half"] == pytest.approx(1.0 / np.sqrt(1.25), abs=1e-6)


def test_select_queries_with_nothing_selected() -> None:
    ili, panel = _sine_panel()
    selected, correlations = select_queries(panel[["orthogonal", "anti"]], ili, (ili.index[0], ili.index[-1]))
    assert selected.columns.empty
    assert correlations == {}


def test_fit_preprocessing_drops_constant_queries() -> None:
    ili, panel = _sine_panel()
    panel["flat"] = 2.0
    _, state = fit_preprocessing(ili, panel, ili.index[0], ili.index[-1])
    assert state.dropped == ["flat"]
    assert "flat" not in state.selected


@pytest.fixture
def synthetic_inputs(small_synthetic: SyntheticConfig) -> tuple[pd.Series, pd.DataFrame]:
    data = synthesize(small_synthetic)
    ili = weekly_to_daily(data.ili)
    return ili, data.queries.loc[ili.index[0] : ili.index[-1]]


def test_fit_preprocessing_ignores_data_after_the_fit_end(synthetic_inputs: tuple[pd.Series, pd.DataFrame]) -> None:
    ili, panel = synthetic_inputs
    fit_start, fit_end = pd.Timestamp("2010-03-01"), pd.Timestamp("2012-08-22")
    first, state = fit_preprocessing(ili, panel, fit_start, fit_end)

    tampered = panel.copy()
    tampered.loc[fit_end + pd.Timedelta(days=1) :] *= 50.0
    tampered_ili = ili.copy()
    tampered_ili.loc[fit_end + pd.Timedelta(days=1) :] = 0.0
    second, tampered_state = fit_preprocessing(tampered_ili, tampered, fit_start, fit_end)

    assert state == tampered_state
    pd.testing.assert_frame_equal(first.loc[:fit_end], second.loc[:fit_end])
    assert "flu" in state.selected
    assert state.correlations["flu"] > 0.8


def test_state_round_trip_and_transform(synthetic_inputs: tuple[pd.Series, pd.DataFrame]) -> None:
    ili, panel = synthetic_inputs
    normalized, state = fit_preprocessing(ili, panel, "2010-03-01", "2012-08-22")
    restored = PreprocessingState.from_dict(state.to_dict())
    assert restored == state
    pd.testing.assert_frame_equal(restored.transform(panel), normalized)
    with pytest.raises(InvalidInputError):
        restored.transform(panel.drop(columns=state.selected[:1]))


def test_normalized_fit_period_spans_unit_interval(synthetic_inputs: tuple[pd.Series, pd.DataFrame]) -> None:
    ili, panel = synthetic_inputs
    normalized, state = fit_preprocessing(ili, panel, "2010-03-01", "2012-08-22")
    fit = normalized.loc["2010-03-01":"2012-08-22"]
    for query in state.selected:
        assert fit[query].min() == pytest.approx(0.0, abs=1e-12)
        assert fit[query].max() == pytest.approx(1.0)
