from __future__ import annotations

import math

import numpy as np
import pytest

from core import autodiff as ad
from core.autodiff import Parameter, Tensor, gradient_check
from core.bayes import GaussianWeightDistribution, kl_gaussian
from core.errors import InvalidInputError, InvalidParameterError, ShapeError
from core.losses import gaussian_nll, mse_loss, negative_elbo

HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


@pytest.mark.parametrize(
    ("y", "y_hat", "expected"),
    [([1.0, 2.0], [1.0, 2.0], 0.0), ([0.0, 0.0], [1.0, 1.0], 1.0), ([1.0, 3.0], [2.0, 2.0], 1.0)],
)
def test_mse_values(y: list[float], y_hat: list[float], expected: float) -> None:
    assert mse_loss(y, y_hat).item() == pytest.approx(expected)


def test_mse_rejects_empty_and_mismatched() -> None:
    with pytest.raises(InvalidInputError):
        mse_loss([], [])
    with pytest.raises(ShapeError):
        mse_loss([1.0, 2.0], [1.0])


def test_nll_vanishes_at_unit_density() -> None:
    sigma = 1.0 / math.sqrt(2.0 * math.pi)
    assert gaussian_nll([1.0, 2.0], [1.0, 2.0], [sigma, sigma]).item() == pytest.approx(0.0, abs=1e-12)


def test_nll_unit_sigma_perfect_fit() -> None:
    assert gaussian_nll([3.0], [3.0], 1.0).item() == pytest.approx(HALF_LOG_TWO_PI)
    assert HALF_LOG_TWO_PI == pytest.approx(0.91894, abs=1e-5)


def test_nll_confident_miss() -> None:
    value = gaussian_nll([1.0], [0.0], [1e-3]).item()
    assert value == pytest.approx(5e5 + math.log(1e-3) + HALF_LOG_TWO_PI)
    assert value == pytest.approx(499994, abs=1.0)


@pytest.mark.parametrize("sigma", [0.0, -1.0, math.inf])
def test_nll_rejects_invalid_sigma(sigma: float) -> None:
    with pytest.raises(InvalidParameterError):
        gaussian_nll([1.0], [1.0], [sigma])


def test_nll_gradient(rng: np.random.Generator) -> None:
    y = rng.normal(size=5)
    mean = Parameter(rng.normal(size=5))
    raw = Parameter(rng.normal(size=5))
    assert gradient_check(lambda: gaussian_nll(y, mean, ad.softplus(raw, 0.25)), [mean, raw]) < 1e-6


def test_elbo_is_zero_for_matching_distributions() -> None:
    q = GaussianWeightDistribution.of([0.2, -0.4], [0.5, 0.5])
    sigma = 1.0 / math.sqrt(2.0 * math.pi)
    loss = negative_elbo([1.0], [1.0], sigma, kl_gaussian(q, q))
    assert loss.item() == pytest.approx(0.0, abs=1e-12)


def test_elbo_adds_nll_and_kl() -> None:
    kl = kl_gaussian(GaussianWeightDistribution.of([0.0], [1.0]), GaussianWeightDistribution.of([1.0], [1.0]))
    loss = negative_elbo([2.0], [2.0], 1.0, kl)
    assert loss.item() == pytest.approx(HALF_LOG_TWO_PI + 0.5)
    assert loss.item() == pytest.approx(1.41894, abs=1e-5)


def test_elbo_kl_term_ignores_targets() -> None:
    kl = Tensor([0.7, 0.3])
    first = negative_elbo([0.0, 1.0], [0.5, 0.5], 1.0, kl).item() - gaussian_nll([0.0, 1.0], [0.5, 0.5], 1.0).item()
    second = negative_elbo([9.0, -4.0], [0.5, 0.5], 1.0, kl).item() - gaussian_nll([9.0, -4.0], [0.5, 0.5], 1.0).item()
    assert first == pytest.approx(0.5)
    assert second == pytest.approx(0.5)


def test_elbo_weights_the_kl() -> None:
    base = negative_elbo([1.0], [1.0], 1.0, [2.0], kl_weight=0.0).item()
    weighted = negative_elbo([1.0], [1.0], 1.0, [2.0], kl_weight=0.25).item()
    assert weighted - base == pytest.approx(0.5)
    with pytest.raises(InvalidParameterError):
        negative_elbo([1.0], [1.0], 1.0, [2.0], kl_weight=-1.0)
