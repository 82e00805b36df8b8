"""Training objectives: MSE, Gaussian NLL and the negative ELBO."""

from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import InvalidInputError, InvalidParameterError, ShapeError

HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


def _pair(y: object, y_hat: object) -> tuple[Tensor, Tensor]:
    y, y_hat = ad.as_tensor(y), ad.as_tensor(y_hat)
    if y.size == 0 or y_hat.size == 0:
        raise InvalidInputError("loss of an empty series")
    if y.shape != y_hat.shape:
        raise ShapeError(f"target shape {y.shape} differs from prediction shape {y_hat.shape}")
    return y, y_hat


def mse_loss(y: object, y_hat: object) -> Tensor:
    y, y_hat = _pair(y, y_hat)
    return ad.mean(ad.square(y - y_hat))


def gaussian_nll(y: object, y_hat: object, sigma_hat: object) -> Tensor:
    """Mean of ``(y - y_hat)^2 / (2 sigma^2) + 0.5 ln(2 pi sigma^2)``.

    ``sigma_hat`` may be a scalar shared by every point.
    """
    y, y_hat = _pair(y, y_hat)
    sigma = ad.as_tensor(sigma_hat)
    if np.any(sigma.value <= 0) or not np.all(np.isfinite(sigma.value)):
        raise InvalidParameterError("predicted standard deviations must be positive and finite")
    if sigma.size != 1 and sigma.shape != y.shape:
        raise ShapeError(f"sigma shape {sigma.shape} does not match target shape {y.shape}")
    variance = ad.square(sigma)
    residual = ad.square(y - y_hat) / (2.0 * variance)
    return ad.mean(residual + 0.5 * ad.log(variance) + HALF_LOG_TWO_PI)


def negative_elbo(
    y: object,
    y_hat: object,
    sigma_hat: object,
    kl: object,
    *,
    kl_weight: float = 1.0,
) -> Tensor:
    """Single-sample negative log-likelihood plus the weighted mean KL per example.

    ``sigma_hat`` is the fixed output std for model-uncertainty training or
    the predicted std for combined training.
    """
    if kl_weight < 0:
        raise InvalidParameterError(f"kl_weight must be nonnegative, got {kl_weight}")
    kl = ad.as_tensor(kl)
    return gaussian_nll(y, y_hat, sigma_hat) + kl_weight * ad.mean(kl)
