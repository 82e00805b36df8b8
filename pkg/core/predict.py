"""Point, data-, model- and combined-uncertainty prediction."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
import pandas as pd

from models.forecaster import UncertaintyMode

from . import autodiff as ad
from .errors import InvalidInputError, InvalidParameterError, MisuseError
from .forecasts import STD_FLOOR
from .metrics import crps_gaussian, nll_metric
from .networks import NeuralForecaster

logger = logging.getLogger(__name__)

DEFAULT_K_VALUES = (2, 5, 10, 25, 50, 100, 1000)


def _require(model: NeuralForecaster, mode: UncertaintyMode, operation: str) -> None:
    if not isinstance(model, NeuralForecaster):
        raise MisuseError(f"{operation} needs a neural forecaster, got {type(model).__name__}")
    if model.spec.uncertainty is not mode:
        raise MisuseError(f"{operation} does not apply to {model.spec.model_id}")


def _unbatch(x: object, values: np.ndarray) -> np.ndarray | float:
    return float(values[0]) if np.ndim(x) == 2 else values


def _check_k(k: int) -> None:
    if k < 1:
        raise InvalidParameterError(f"K must be at least 1, got {k}")


def predict_point(model: NeuralForecaster, x: object) -> np.ndarray | float:
    _require(model, UncertaintyMode.V, "predict_point")
    with ad.no_tape():
        out = model.forward(x, training=False)
    return _unbatch(x, out.mean.value)


def predict_data_uncertainty(model: NeuralForecaster, x: object) -> tuple[np.ndarray | float, np.ndarray | float]:
    _require(model, UncertaintyMode.D, "predict_data_uncertainty")
    with ad.no_tape():
        out = model.forward(x, training=False)
    return _unbatch(x, out.mean.value), _unbatch(x, out.std.value)


def predict_model_uncertainty(model: NeuralForecaster, x: object, k: int, rng: np.random.Generator) -> tuple[np.ndarray | float, np.ndarray | float]:
    """Mean and population std of ``k`` sampled predictive means."""
    _require(model, UncertaintyMode.M, "predict_model_uncertainty")
    _check_k(k)
    with ad.no_tape():
        h = model.representation(x, training=False)
        means, _ = model.sample_heads(h, k, rng)
    return _unbatch(x, means.mean(axis=0)), _unbatch(x, means.std(axis=0))


def combine_uncertainty(sample_means: object, sample_stds: object) -> tuple[np.ndarray | float, np.ndarray | float]:
    """Moments of an equal-weight mixture of Gaussians along axis 0.

    The variance is the population variance of the means plus the mean of
    the variances.
    """
    means = np.asarray(sample_means, dtype=np.float64)
    stds = np.asarray(sample_stds, dtype=np.float64)
    if means.size == 0 or means.shape[0] == 0:
        raise InvalidInputError("no samples to combine")
    if means.shape != stds.shape:
        raise InvalidInputError(f"sample means {means.shape} and stds {stds.shape} differ in shape")
    mean = means.mean(axis=0)
    variance = means.var(axis=0) + np.mean(stds**2, axis=0)
    std = np.sqrt(variance)
    if means.ndim == 1:
        return float(mean), float(std)
    return mean, std


def predict_combined(model: NeuralForecaster, x: object, k: int, rng: np.random.Generator) -> tuple[np.ndarray | float, np.ndarray | float]:
    _require(model, UncertaintyMode.C, "predict_combined")
    _check_k(k)
    with ad.no_tape():
        h = model.representation(x, training=False)
        means, stds = model.sample_heads(h, k, rng)
    mean, std = combine_uncertainty(means, stds)
    return _unbatch(x, mean), _unbatch(x, std)


def predict(model: NeuralForecaster, X: np.ndarray, *, k: int = 100, rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray | None]:
    """Dispatch on the uncertainty mode; returns batched ``(mean, std)`` with ``std`` None for -v."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise InvalidInputError(f"expected a batch of windows, got shape {X.shape}")
    mode = model.spec.uncertainty
    if mode is UncertaintyMode.V:
        return predict_point(model, X), None
    if mode is UncertaintyMode.D:
        return predict_data_uncertainty(model, X)
    if rng is None:
        raise MisuseError(f"{model.spec.model_id} samples weights and needs an rng")
    if mode is UncertaintyMode.M:
        return predict_model_uncertainty(model, X, k, rng)
    return predict_combined(model, X, k, rng)


def k_convergence(
    model: NeuralForecaster,
    X: np.ndarray,
    y: np.ndarray,
    k_values: Sequence[int] = DEFAULT_K_VALUES,
    *,
    seed: int = 0,
) -> pd.DataFrame:
    """CRPS and NLL of a stochastic model for each sample count ``K``."""
    if not model.spec.is_stochastic:
        raise MisuseError(f"{model.spec.model_id} has no weight distribution to sample")
    rows = []
    for k in k_values:
        mean, std = predict(model, X, k=k, rng=np.random.default_rng(seed))
        std = np.maximum(std, STD_FLOOR)
        rows.append({"k": k, "crps": crps_gaussian(y, mean, std), "nll": nll_metric(y, mean, std)})
        logger.debug(f"K={k}: CRPS {rows[-1]['crps']:.4f}")
    return pd.DataFrame(rows)
