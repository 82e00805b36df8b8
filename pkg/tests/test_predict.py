from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import InvalidInputError, InvalidParameterError, MisuseError
from core.networks import build_model
from core.predict import (
    combine_uncertainty,
    k_convergence,
    predict,
    predict_combined,
    predict_data_uncertainty,
    predict_model_uncertainty,
    predict_point,
)
from models import ForecasterSpec

# softplus(-100) with a sharpening factor of 10 underflows to exactly 0
COLLAPSED = -100.0


def _zeroed(text: str, input_dims: tuple[int, int], **overrides: object):
    model = build_model(ForecasterSpec.parse(text, **overrides), input_dims)
    for param in model.parameters():
        param.value = np.zeros_like(param.value)
    return model


def _collapsed_posterior(model, mean_bias: list[float]) -> None:
    """Posterior mean bias vector ``mean_bias`` with zero std."""
    params = model.output.posterior_net.params
    n = model.output.n_weights
    params["b"].value = np.concatenate([np.asarray(mean_bias, dtype=np.float64), np.full(n, COLLAPSED)])


def test_point_prediction_of_zero_model_is_the_bias() -> None:
    model = _zeroed("ff-v", (2, 3))
    model.output.params["b"].value = np.array([3.5])
    assert predict_point(model, np.ones((2, 3))) == pytest.approx(3.5)


def test_point_prediction_by_hand() -> None:
    model = _zeroed("ff-v", (1, 1), ff_hidden=1)
    model.hidden.params["W"].value = np.array([[1.0]])
    model.output.params["W"].value = np.array([[2.0]])
    assert predict_point(model, np.array([[3.0]])) == pytest.approx(6.0)


def test_point_prediction_is_repeatable(rng: np.random.Generator) -> None:
    model = build_model(ForecasterSpec.parse("lstm-v"), (2, 5), seed=3)
    x = rng.normal(size=(4, 2, 5))
    np.testing.assert_array_equal(predict_point(model, x), predict_point(model, x))


def test_data_uncertainty_std_at_zero_preactivation() -> None:
    model = _zeroed("ff-d", (2, 3))
    mean, std = predict_data_uncertainty(model, np.ones((2, 3)))
    assert mean == pytest.approx(0.0)
    assert std == pytest.approx(4.0 * math.log(2.0))
    assert std == pytest.approx(2.77259, abs=1e-5)


def test_data_uncertainty_std_is_positive(rng: np.random.Generator) -> None:
    model = build_model(ForecasterSpec.parse("lstm-d"), (2, 5), seed=1)
    _, std = predict_data_uncertainty(model, 50.0 * rng.normal(size=(6, 2, 5)))
    assert np.all(std > 0)


def test_model_uncertainty_with_identical_samples() -> None:
    model = _zeroed("ff-m", (1, 3), ff_hidden=2)
    _collapsed_posterior(model, [0.0, 0.0, 1.7])
    mean, std = predict_model_uncertainty(model, np.ones((1, 3)), 20, np.random.default_rng(0))
    assert mean == pytest.approx(1.7)
    assert std == pytest.approx(0.0, abs=1e-12)


def test_model_uncertainty_single_sample_has_zero_spread(rng: np.random.Generator) -> None:
    model = build_model(ForecasterSpec.parse("ff-m"), (2, 3), seed=2)
    _, std = predict_model_uncertainty(model, rng.normal(size=(4, 2, 3)), 1, rng)
    np.testing.assert_array_equal(std, np.zeros(4))


def test_model_uncertainty_is_seed_reproducible(rng: np.random.Generator) -> None:
    model = build_model(ForecasterSpec.parse("lstm-m"), (2, 4), seed=5)
    x = rng.normal(size=(3, 2, 4))
    first = predict_model_uncertainty(model, x, 10, np.random.default_rng(8))
    second = predict_model_uncertainty(model, x, 10, np.random.default_rng(8))
    np.testing.assert_array_equal(first[0], second[0])
    np.testing.assert_array_equal(first[1], second[1])


def test_combined_with_identical_samples() -> None:
    model = _zeroed("ff-c", (1, 3), ff_hidden=2)
    _collapsed_posterior(model, [0.0, 0.0, 0.0, 0.0, 2.0, 0.0])
    mean, std = predict_combined(model, np.ones((1, 3)), 15, np.random.default_rng(0))
    assert mean == pytest.approx(2.0)
    assert std == pytest.approx(4.0 * math.log(2.0))


def test_combined_with_one_sample_returns_its_std(rng: np.random.Generator) -> None:
    model = build_model(ForecasterSpec.parse("ff-c"), (2, 3), seed=6)
    x = rng.normal(size=(4, 2, 3))
    h = model.representation(x)
    means, stds = model.sample_heads(h, 1, np.random.default_rng(3))
    mean, std = predict_combined(model, x, 1, np.random.default_rng(3))
    np.testing.assert_allclose(mean, means[0])
    np.testing.assert_allclose(std, stds[0])


def test_combined_matches_recorded_samples(rng: np.random.Generator) -> None:
    model = build_model(ForecasterSpec.parse("lstm-c"), (2, 4), seed=7)
    x = rng.normal(size=(3, 2, 4))
    means, stds = model.sample_heads(model.representation(x), 30, np.random.default_rng(11))
    mean, std = predict_combined(model, x, 30, np.random.default_rng(11))
    mixture_second_moment = np.mean(stds**2 + means**2, axis=0)
    np.testing.assert_allclose(mean, means.mean(axis=0))
    np.testing.assert_allclose(std, np.sqrt(mixture_second_moment - means.mean(axis=0) ** 2), rtol=1e-6)


@pytest.mark.parametrize(
    ("means", "stds", "expected_mean", "expected_std"),
    [
        ([1.5, 1.5, 1.5], [0.2, 0.2, 0.2], 1.5, 0.2),
        ([0.0, 2.0], [0.0, 0.0], 1.0, 1.0),
        ([0.0, 0.0], [3.0, 4.0], 0.0, math.sqrt(12.5)),
    ],
)
def test_combine_uncertainty_values(means: list[float], stds: list[float], expected_mean: float, expected_std: float) -> None:
    mean, std = combine_uncertainty(means, stds)
    assert mean == pytest.approx(expected_mean)
    assert std == pytest.approx(expected_std)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(-50, 50, allow_nan=False), st.floats(0, 10, allow_nan=False)),
        min_size=1,
        max_size=12,
    )
)
def test_combine_uncertainty_is_the_mixture_variance(samples: list[tuple[float, float]]) -> None:
    means = np.array([m for m, _ in samples])
    stds = np.array([s for _, s in samples])
    mean, std = combine_uncertainty(means, stds)
    expected = np.mean(stds**2 + means**2) - np.mean(means) ** 2
    assert mean == pytest.approx(np.mean(means))
    assert std**2 == pytest.approx(max(expected, 0.0), rel=1e-9, abs=1e-9)


def test_combine_uncertainty_rejects_bad_input() -> None:
    with pytest.raises(InvalidInputError):
        combine_uncertainty([], [])
    with pytest.raises(InvalidInputError):
        combine_uncertainty([1.0, 2.0], [1.0])


def test_prediction_routines_check_the_mode(rng: np.random.Generator) -> None:
    x = rng.normal(size=(2, 2, 3))
    with pytest.raises(MisuseError):
        predict_point(build_model(ForecasterSpec.parse("ff-d"), (2, 3)), x)
    with pytest.raises(MisuseError):
        predict_data_uncertainty(build_model(ForecasterSpec.parse("ff-v"), (2, 3)), x)
    with pytest.raises(MisuseError):
        predict_combined(build_model(ForecasterSpec.parse("ff-m"), (2, 3)), x, 5, rng)
    with pytest.raises(MisuseError):
        predict_model_uncertainty(build_model(ForecasterSpec.parse("ff-c"), (2, 3)), x, 5, rng)


def test_k_must_be_positive(rng: np.random.Generator) -> None:
    with pytest.raises(InvalidParameterError):
        predict_model_uncertainty(build_model(ForecasterSpec.parse("ff-m"), (2, 3)), rng.normal(size=(2, 2, 3)), 0, rng)


def test_predict_dispatches_on_mode(rng: np.random.Generator) -> None:
    x = rng.normal(size=(4, 2, 3))
    mean, std = predict(build_model(ForecasterSpec.parse("ff-v"), (2, 3)), x)
    assert mean.shape == (4,) and std is None
    mean, std = predict(build_model(ForecasterSpec.parse("ff-c"), (2, 3)), x, k=5, rng=rng)
    assert mean.shape == std.shape == (4,)
    with pytest.raises(MisuseError):
        predict(build_model(ForecasterSpec.parse("ff-m"), (2, 3)), x)


def test_k_convergence_reports_each_k(rng: np.random.Generator) -> None:
    model = build_model(ForecasterSpec.parse("ff-c"), (2, 3), seed=2)
    x = rng.normal(size=(6, 2, 3))
    y = rng.normal(size=6)
    frame = k_convergence(model, x, y, [1, 5, 20], seed=3)
    assert frame["k"].tolist() == [1, 5, 20]
    assert np.all(np.isfinite(frame[["crps", "nll"]].to_numpy()))
    with pytest.raises(MisuseError):
        k_convergence(build_model(ForecasterSpec.parse("ff-d"), (2, 3)), x, y)
