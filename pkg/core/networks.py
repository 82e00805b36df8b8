"""Feed-forward and recurrent forecasters with their four output heads."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from models.forecaster import Architecture, ForecasterSpec, UncertaintyMode

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .baselines import HistoricalAverageForecaster, NaiveForecaster
from .bayes import BayesianHead
from .errors import ConfigurationError, MisuseError, ShapeError
from .gp import GaussianProcessForecaster
from .layers import LSTM, BatchNorm, Dense, ParameterSet

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class HeadOutput:
    """Per-example predictive mean, optional std and (stochastic heads) KL term."""

    mean: Tensor
    std: Tensor | None = None
    kl: Tensor | None = None


class NeuralForecaster:
    """Shared head handling and state access for the two architectures."""

    architecture: Architecture

    def __init__(self, spec: ForecasterSpec, input_dims: tuple[int, int], hidden: int, rng: np.random.Generator) -> None:
        if spec.architecture is not self.architecture:
            raise ConfigurationError(f"{type(self).__name__} cannot build a {spec.architecture.value} model")
        rows, lag = input_dims
        if rows < 1 or lag < 1:
            raise ConfigurationError(f"input dimensions must be positive, got {input_dims}")
        if not spec.use_queries and rows != 1:
            raise ConfigurationError(f"{spec.model_id} takes only the ILI row, got {rows} input rows")
        self.spec = spec
        self.input_dims = (rows, lag)
        self.batch_norm: BatchNorm | None = None
        if spec.uses_batch_norm:
            self.batch_norm = BatchNorm.create(
                hidden,
                momentum=spec.batch_norm_momentum,
                epsilon=spec.batch_norm_epsilon,
                name="batch_norm",
            )
        self.output: Dense | BayesianHead = self._build_head(hidden, rng)

    def _build_head(self, hidden: int, rng: np.random.Generator) -> Dense | BayesianHead:
        mode = self.spec.uncertainty
        n_out = 2 if mode in (UncertaintyMode.D, UncertaintyMode.C) else 1
        if mode in (UncertaintyMode.M, UncertaintyMode.C):
            return BayesianHead.create(hidden, n_out, rng, rho_q=self.spec.rho_q, sigma_p=self.spec.sigma_p, name="head")
        return Dense.create(hidden, n_out, rng, name="head")

    # ------------------------------------------------------------------
    # forward pass
    # ------------------------------------------------------------------

    def check_input(self, x: object) -> np.ndarray:
        """Return ``x`` as a ``(batch, rows, lag)`` array."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[None, :, :]
        if x.ndim != 3 or x.shape[1:] != self.input_dims:
            raise ShapeError(f"{self.spec.model_id}: expected inputs of shape (batch, {self.input_dims[0]}, {self.input_dims[1]}), got {x.shape}")
        return x

    def _features(self, x: np.ndarray) -> Tensor:
        raise NotImplementedError

    def representation(self, x: object, *, training: bool = False) -> Tensor:
        h = self._features(self.check_input(x))
        if self.batch_norm is not None:
            h = self.batch_norm(h, training=training)
        return h

    def _split(self, out: Tensor, kl: Tensor | None) -> HeadOutput:
        mean = out[:, 0]
        std = ad.softplus(out[:, 1], self.spec.rho) if out.shape[1] == 2 else None
        return HeadOutput(mean=mean, std=std, kl=kl)

    def head(self, h: Tensor, *, rng: np.random.Generator | None = None) -> HeadOutput:
        if isinstance(self.output, BayesianHead):
            if rng is None:
                raise MisuseError(f"{self.spec.model_id} samples its output weights and needs an rng")
            out, kl = self.output(h, rng)
            return self._split(out, kl)
        return self._split(self.output(h), None)

    def sample_heads(self, h: Tensor, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray | None]:
        """``k`` weight draws against one posterior; returns ``(k, batch)`` means and stds."""
        if not isinstance(self.output, BayesianHead):
            raise MisuseError(f"{self.spec.model_id} has a deterministic output layer")
        posterior, _ = self.output.distributions(h)
        means, stds = [], []
        for _ in range(k):
            drawn = self._split(self.output.apply(h, posterior, rng), None)
            means.append(drawn.mean.value)
            if drawn.std is not None:
                stds.append(drawn.std.value)
        return np.stack(means), (np.stack(stds) if stds else None)

    def forward(self, x: object, *, training: bool = False, rng: np.random.Generator | None = None) -> HeadOutput:
        return self.head(self.representation(x, training=training), rng=rng)

    # ------------------------------------------------------------------
    # parameters and state
    # ------------------------------------------------------------------

    def _body_sets(self) -> list[ParameterSet]:
        raise NotImplementedError

    def parameter_sets(self) -> list[ParameterSet]:
        sets = self._body_sets()
        if self.batch_norm is not None:
            sets.append(self.batch_norm.params)
        if isinstance(self.output, BayesianHead):
            sets.extend(self.output.parameter_sets)
        else:
            sets.append(self.output.params)
        return sets

    def named_parameters(self) -> Iterator[tuple[str, Parameter]]:
        for params in self.parameter_sets():
            yield from params.qualified()

    def parameters(self) -> list[Parameter]:
        return [p for params in self.parameter_sets() for p in params.parameters()]

    def parameter_count(self) -> int:
        return int(sum(params.count() for params in self.parameter_sets()))

    def buffers(self) -> dict[str, np.ndarray]:
        if self.batch_norm is None:
            return {}
        return {
            "batch_norm.running_mean": self.batch_norm.state.running_mean.copy(),
            "batch_norm.running_var": self.batch_norm.state.running_var.copy(),
        }

    def load_state(self, parameters: Mapping[str, np.ndarray], buffers: Mapping[str, np.ndarray] | None = None) -> None:
        named = dict(self.named_parameters())
        missing = set(named) - set(parameters)
        unexpected = set(parameters) - set(named)
        if missing or unexpected:
            raise ConfigurationError(f"parameter names differ: missing {sorted(missing)}, unexpected {sorted(unexpected)}")
        for key, param in named.items():
            value = np.asarray(parameters[key], dtype=np.float64)
            if value.shape != param.shape:
                raise ShapeError(f"{key}: stored shape {value.shape} differs from model shape {param.shape}")
            param.value = value.copy()
        if self.batch_norm is not None and buffers:
            self.batch_norm.state.running_mean = np.asarray(buffers["batch_norm.running_mean"], dtype=np.float64).copy()
            self.batch_norm.state.running_var = np.asarray(buffers["batch_norm.running_var"], dtype=np.float64).copy()


class FeedForwardForecaster(NeuralForecaster):
    """Column-major flattened window, one ReLU hidden layer, optional batch norm, head."""

    architecture = Architecture.FF

    def __init__(self, spec: ForecasterSpec, input_dims: tuple[int, int], rng: np.random.Generator) -> None:
        rows, lag = input_dims
        self.hidden = Dense.create(rows * lag, spec.ff_hidden, rng, activation="relu", name="hidden")
        super().__init__(spec, input_dims, spec.ff_hidden, rng)

    def _features(self, x: np.ndarray) -> Tensor:
        flat = x.transpose(0, 2, 1).reshape(x.shape[0], -1)
        return self.hidden(flat)

    def _body_sets(self) -> list[ParameterSet]:
        return [self.hidden.params]


class RecurrentForecaster(NeuralForecaster):
    """Many-to-one LSTM over the window's days, a ReLU dense layer, batch norm, head."""

    architecture = Architecture.LSTM

    def __init__(self, spec: ForecasterSpec, input_dims: tuple[int, int], rng: np.random.Generator) -> None:
        rows, _ = input_dims
        self.lstm = LSTM.create(rows, spec.lstm_hidden, rng, name="lstm")
        self.dense = Dense.create(spec.lstm_hidden, spec.lstm_dense, rng, activation="relu", name="dense")
        super().__init__(spec, input_dims, spec.lstm_dense, rng)

    def _features(self, x: np.ndarray) -> Tensor:
        return self.dense(self.lstm(x))

    def _body_sets(self) -> list[ParameterSet]:
        return [self.lstm.params, self.dense.params]


def build_model(spec: ForecasterSpec, input_dims: tuple[int, int] | None = None, *, seed: int = 0):
    """Instantiate the forecaster ``spec`` describes.

    Neural models need ``input_dims = (rows, lag)``; baselines ignore it.
    """
    if spec.architecture is Architecture.NAIVE:
        return NaiveForecaster(spec)
    if spec.architecture is Architecture.HISTORICAL:
        return HistoricalAverageForecaster(spec)
    if spec.architecture is Architecture.GP:
        return GaussianProcessForecaster(spec)
    if input_dims is None:
        raise ConfigurationError(f"{spec.model_id} needs input dimensions")

    rng = np.random.default_rng(seed)
    model_cls = FeedForwardForecaster if spec.architecture is Architecture.FF else RecurrentForecaster
    model = model_cls(spec, tuple(input_dims), rng)
    logger.debug(f"Built {spec.model_id} with {model.parameter_count()} parameters for inputs {input_dims}")
    return model
