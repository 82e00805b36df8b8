"""Minibatch training loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from models.forecaster import ForecasterSpec, UncertaintyMode
from models.training import LossKind, LossSpec, TrainConfig

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .errors import ConfigurationError, InvalidInputError, TrainingAbortedError
from .losses import gaussian_nll, mse_loss, negative_elbo
from .networks import HeadOutput
from .optim import AdamState, adam_step, clip_global_norm, lr_at
from .windows import WindowedDataset

logger = logging.getLogger(__name__)


class TrainableModel(Protocol):
    def parameters(self) -> list[Parameter]: ...

    def representation(self, x: object, *, training: bool = False) -> Tensor: ...

    def head(self, h: Tensor, *, rng: np.random.Generator | None = None) -> HeadOutput: ...


@dataclass(slots=True)
class TrainResult:
    model: TrainableModel
    loss_trace: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.loss_trace[-1] if self.loss_trace else math.nan


def default_loss(spec: ForecasterSpec) -> LossSpec:
    mode = spec.uncertainty
    if mode is UncertaintyMode.V:
        return LossSpec(kind=LossKind.MSE)
    if mode is UncertaintyMode.D:
        return LossSpec(kind=LossKind.GAUSSIAN_NLL)
    if mode is UncertaintyMode.M:
        return LossSpec(kind=LossKind.NEGATIVE_ELBO, sigma=spec.sigma)
    return LossSpec(kind=LossKind.NEGATIVE_ELBO)


def batch_loss(output: HeadOutput, y: np.ndarray, loss: LossSpec, *, kl_weight: float = 1.0) -> Tensor:
    if loss.kind is LossKind.MSE:
        return mse_loss(y, output.mean)
    if loss.kind is LossKind.GAUSSIAN_NLL:
        if output.std is None:
            raise ConfigurationError("Gaussian NLL needs a model with a predicted standard deviation")
        return gaussian_nll(y, output.mean, output.std)
    if output.kl is None:
        raise ConfigurationError("the negative ELBO needs a stochastic output layer")
    sigma = loss.sigma if loss.sigma is not None else output.std
    if sigma is None:
        raise ConfigurationError("the negative ELBO needs either a fixed sigma or a predicted standard deviation")
    return negative_elbo(y, output.mean, sigma, output.kl, kl_weight=kl_weight)


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n)
    chunks = [order[start : start + batch_size] for start in range(0, n, batch_size)]
    # a trailing single example cannot be batch-normalized
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        chunks[-2] = np.concatenate([chunks[-2], chunks.pop()])
    return chunks


def train(model: TrainableModel, dataset: WindowedDataset, config: TrainConfig) -> TrainResult:
    """Fit ``model`` in place and return it with the per-epoch mean loss."""
    if len(dataset) == 0:
        raise InvalidInputError("cannot train on an empty dataset")
    loss_spec = config.loss
    if loss_spec is None:
        spec = getattr(model, "spec", None)
        if spec is None:
            raise ConfigurationError("config.loss is required for models without a forecaster spec")
        loss_spec = default_loss(spec)

    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    state = AdamState()
    trace: list[float] = []

    for epoch in range(config.epochs):
        lr = lr_at(config.schedule, epoch, config.epochs)
        batches = _batches(len(dataset), config.batch_size, rng)
        kl_weight = 1.0 / len(batches)
        losses = []
        for index, rows in enumerate(batches):
            x, y = dataset.X[rows], dataset.y[rows]
            with ad.Tape() as tape:
                h = model.representation(x, training=True)
                draws = [batch_loss(model.head(h, rng=rng), y, loss_spec, kl_weight=kl_weight) for _ in range(config.k_train)]
                loss = draws[0] if len(draws) == 1 else ad.mean(ad.concat([ad.reshape(d, (1,)) for d in draws]))
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingAbortedError("non-finite training loss", epoch=epoch, batch=index)
            grads = ad.backward(tape, loss, wrt=params)
            if config.clip_norm is not None:
                clip_global_norm(grads, config.clip_norm)
            try:
                adam_step(state, params, grads, lr)
            except TrainingAbortedError as exc:
                raise TrainingAbortedError(str(exc), epoch=epoch, batch=index) from exc
            losses.append(value)
        trace.append(float(np.mean(losses)))
        logger.debug(f"epoch {epoch + 1}/{config.epochs} lr={lr:.6g} loss={trace[-1]:.6f}")

    return TrainResult(model=model, loss_trace=trace)
