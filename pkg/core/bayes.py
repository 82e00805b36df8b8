"""Variational Bayesian output layer.

The prior and the posterior over the final layer's weights (and bias) are
produced per example by single dense layers conditioned on the hidden
representation. The prior has a learned mean and a fixed scalar std; the
posterior learns both, its std going through a sharpened softplus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import InvalidParameterError, ShapeError
from .layers import ParameterSet, dense_forward, dense_params

PRIOR_STD = 0.5
POSTERIOR_SHARPENING = 10.0


@dataclass(slots=True)
class GaussianWeightDistribution:
    """Diagonal Gaussian over flattened final-layer weights.

    ``mean`` is ``(n_weights,)`` or ``(batch, n_weights)``; ``std`` has the
    same shape or is a shared positive scalar.
    """

    mean: Tensor
    std: Tensor | float

    @classmethod
    def of(cls, mean: object, std: object) -> "GaussianWeightDistribution":
        std_value = float(std) if np.ndim(std) == 0 and not isinstance(std, Tensor) else ad.as_tensor(std)
        return cls(mean=ad.as_tensor(mean), std=std_value)

    @property
    def size(self) -> int:
        return self.mean.shape[-1]

    def std_array(self) -> np.ndarray:
        if isinstance(self.std, Tensor):
            return self.std.value
        return np.full(self.mean.shape, self.std)


@dataclass(slots=True)
class WeightSample:
    weights: Tensor
    epsilon: np.ndarray


@dataclass(slots=True)
class AmortizationNet:
    """One dense layer mapping the conditioning vector to distribution parameters."""

    params: ParameterSet
    n_weights: int
    kind: str
    rho_q: float = POSTERIOR_SHARPENING
    sigma_p: float = PRIOR_STD

    def __post_init__(self) -> None:
        if not self.rho_q > 0:
            raise InvalidParameterError(f"posterior sharpening factor must be positive, got {self.rho_q}")
        if not self.sigma_p > 0:
            raise InvalidParameterError(f"prior std must be positive, got {self.sigma_p}")
        if self.kind not in ("prior", "posterior"):
            raise InvalidParameterError(f"unknown amortization net kind {self.kind!r}")

    @classmethod
    def prior(cls, n_cond: int, n_weights: int, rng: np.random.Generator | None, *, sigma_p: float = PRIOR_STD, name: str = "prior") -> "AmortizationNet":
        return cls(dense_params(n_cond, n_weights, rng, name=name), n_weights, "prior", sigma_p=sigma_p)

    @classmethod
    def posterior(cls, n_cond: int, n_weights: int, rng: np.random.Generator | None, *, rho_q: float = POSTERIOR_SHARPENING, name: str = "posterior") -> "AmortizationNet":
        return cls(dense_params(n_cond, 2 * n_weights, rng, name=name), n_weights, "posterior", rho_q=rho_q)

    @property
    def n_cond(self) -> int:
        return self.params["W"].shape[1]


def _check_cond(net: AmortizationNet, cond: Tensor) -> None:
    if cond.shape[-1] != net.n_cond:
        raise ShapeError(f"{net.params.name}: conditioning vector has {cond.shape[-1]} entries, expected {net.n_cond}")


def prior_params(net: AmortizationNet, cond: object) -> GaussianWeightDistribution:
    cond = ad.as_tensor(cond)
    _check_cond(net, cond)
    return GaussianWeightDistribution(mean=dense_forward(net.params, cond), std=net.sigma_p)


def posterior_params(net: AmortizationNet, cond: object) -> GaussianWeightDistribution:
    cond = ad.as_tensor(cond)
    _check_cond(net, cond)
    out = dense_forward(net.params, cond)
    n = net.n_weights
    mean = out[..., :n]
    std = ad.softplus(out[..., n:], net.rho_q)
    return GaussianWeightDistribution(mean=mean, std=std)


def sample_weights(dist: GaussianWeightDistribution, rng: np.random.Generator) -> WeightSample:
    """Reparameterized draw ``mean + std * eps``; gradients flow to mean and std."""
    epsilon = rng.standard_normal(dist.mean.shape)
    weights = dist.mean + dist.std * epsilon
    return WeightSample(weights=weights, epsilon=epsilon)


def kl_gaussian(q: GaussianWeightDistribution, p: GaussianWeightDistribution) -> Tensor:
    """KL(q || p) summed over weights; one value per row for batched distributions."""
    if q.mean.shape != p.mean.shape:
        raise ShapeError(f"distributions differ in shape: {q.mean.shape} vs {p.mean.shape}")
    for label, dist in (("q", q), ("p", p)):
        if np.any(dist.std_array() <= 0):
            raise InvalidParameterError(f"{label} has a nonpositive standard deviation")

    var_q = ad.square(q.std) if isinstance(q.std, Tensor) else q.std**2
    var_p = ad.square(p.std) if isinstance(p.std, Tensor) else p.std**2
    if isinstance(p.std, Tensor) or isinstance(q.std, Tensor):
        log_ratio = ad.log(p.std) - ad.log(q.std)
    else:
        log_ratio = float(np.log(p.std / q.std))
    terms = log_ratio + (var_q + ad.square(q.mean - p.mean)) / (2.0 * var_p) - 0.5
    return ad.sum(terms, axis=-1)


@dataclass(slots=True)
class BayesianHead:
    """Stochastic final layer ``n_in -> n_out`` with amortized prior and posterior."""

    prior_net: AmortizationNet
    posterior_net: AmortizationNet
    n_in: int
    n_out: int

    @classmethod
    def create(
        cls,
        n_in: int,
        n_out: int,
        rng: np.random.Generator | None,
        *,
        rho_q: float = POSTERIOR_SHARPENING,
        sigma_p: float = PRIOR_STD,
        name: str = "bayes",
    ) -> "BayesianHead":
        n_weights = n_in * n_out + n_out
        return cls(
            prior_net=AmortizationNet.prior(n_in, n_weights, rng, sigma_p=sigma_p, name=f"{name}.prior"),
            posterior_net=AmortizationNet.posterior(n_in, n_weights, rng, rho_q=rho_q, name=f"{name}.posterior"),
            n_in=n_in,
            n_out=n_out,
        )

    @property
    def n_weights(self) -> int:
        return self.n_in * self.n_out + self.n_out

    @property
    def parameter_sets(self) -> tuple[ParameterSet, ParameterSet]:
        return self.prior_net.params, self.posterior_net.params

    def distributions(self, cond: Tensor) -> tuple[GaussianWeightDistribution, GaussianWeightDistribution]:
        return posterior_params(self.posterior_net, cond), prior_params(self.prior_net, cond)

    def apply(self, cond: Tensor, posterior: GaussianWeightDistribution, rng: np.random.Generator) -> Tensor:
        """Draw one weight vector per row of ``cond`` and apply it."""
        sample = sample_weights(posterior, rng)
        return ad.batched_linear(cond, sample.weights, self.n_in, self.n_out)

    def __call__(self, cond: Tensor, rng: np.random.Generator) -> tuple[Tensor, Tensor]:
        posterior, prior = self.distributions(cond)
        return self.apply(cond, posterior, rng), kl_gaussian(posterior, prior)
