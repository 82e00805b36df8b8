"""Deterministic layers: dense, LSTM cell, batch normalization, sharpened softplus."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .errors import DegenerateBatchError, InvalidInputError, InvalidParameterError, ShapeError

Activation = Literal["linear", "relu"]

BN_MOMENTUM = 0.99
BN_EPSILON = 1e-3


@dataclass(slots=True)
class ParameterSet:
    """Named weight matrices and bias vectors of one layer."""

    name: str
    tensors: dict[str, Parameter] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Parameter:
        return self.tensors[key]

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self.tensors.values())

    def parameters(self, *, trainable_only: bool = True) -> list[Parameter]:
        return [p for p in self.tensors.values() if p.trainable or not trainable_only]

    def freeze(self) -> None:
        for param in self.tensors.values():
            param.trainable = False

    def count(self) -> int:
        return int(np.sum([p.size for p in self.tensors.values()]))

    def qualified(self) -> Iterator[tuple[str, Parameter]]:
        for key, param in self.tensors.items():
            yield f"{self.name}.{key}", param


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape: tuple[int, ...]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _as_input(x: object) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# --------------------------------------------------------------------------
# dense
# --------------------------------------------------------------------------


def dense_params(n_in: int, n_out: int, rng: np.random.Generator | None, name: str = "dense") -> ParameterSet:
    """Weights ``W`` are stored ``(n_out, n_in)`` so the layer computes ``W x + b``."""
    weight = glorot_uniform(rng, n_in, n_out, (n_out, n_in)) if rng is not None else np.zeros((n_out, n_in))
    return ParameterSet(
        name=name,
        tensors={
            "W": Parameter(weight, name=f"{name}.W"),
            "b": Parameter(np.zeros(n_out), name=f"{name}.b"),
        },
    )


def dense_forward(params: ParameterSet, x: object, activation: Activation = "linear") -> Tensor:
    x = _as_input(x)
    weight, bias = params["W"], params["b"]
    if x.ndim not in (1, 2) or x.shape[-1] != weight.shape[1]:
        raise ShapeError(f"{params.name}: input has shape {x.shape}, expected trailing dimension {weight.shape[1]}")
    out = ad.matmul(x, ad.transpose(weight)) + bias
    if activation == "relu":
        return ad.relu(out)
    if activation != "linear":
        raise InvalidParameterError(f"unknown activation {activation!r}")
    return out


@dataclass(slots=True)
class Dense:
    params: ParameterSet
    activation: Activation = "linear"

    @classmethod
    def create(cls, n_in: int, n_out: int, rng: np.random.Generator, *, activation: Activation = "linear", name: str = "dense") -> "Dense":
        return cls(params=dense_params(n_in, n_out, rng, name=name), activation=activation)

    @property
    def n_in(self) -> int:
        return self.params["W"].shape[1]

    @property
    def n_out(self) -> int:
        return self.params["W"].shape[0]

    def __call__(self, x: object) -> Tensor:
        return dense_forward(self.params, x, self.activation)


# --------------------------------------------------------------------------
# LSTM
# --------------------------------------------------------------------------


def lstm_params(n_features: int, hidden: int, rng: np.random.Generator | None, name: str = "lstm") -> ParameterSet:
    """Gate order along the first axis is input, forget, candidate, output."""
    if rng is None:
        w_x = np.zeros((4 * hidden, n_features))
        w_h = np.zeros((4 * hidden, hidden))
        bias = np.zeros(4 * hidden)
    else:
        w_x = glorot_uniform(rng, n_features, 4 * hidden, (4 * hidden, n_features))
        w_h = glorot_uniform(rng, hidden, 4 * hidden, (4 * hidden, hidden))
        bias = np.zeros(4 * hidden)
        bias[hidden : 2 * hidden] = 1.0
    return ParameterSet(
        name=name,
        tensors={
            "W_x": Parameter(w_x, name=f"{name}.W_x"),
            "W_h": Parameter(w_h, name=f"{name}.W_h"),
            "b": Parameter(bias, name=f"{name}.b"),
        },
    )


def lstm_step(params: ParameterSet, x_t: object, h_prev: object, c_prev: object) -> tuple[Tensor, Tensor]:
    x_t, h_prev, c_prev = _as_input(x_t), _as_input(h_prev), _as_input(c_prev)
    w_x, w_h, bias = params["W_x"], params["W_h"], params["b"]
    hidden = w_h.shape[1]
    if x_t.shape[-1] != w_x.shape[1]:
        raise ShapeError(f"{params.name}: x_t has {x_t.shape[-1]} features, expected {w_x.shape[1]}")
    if h_prev.shape[-1] != hidden or c_prev.shape[-1] != hidden:
        raise ShapeError(f"{params.name}: state sizes {h_prev.shape}, {c_prev.shape} do not match hidden size {hidden}")

    pre = ad.matmul(x_t, ad.transpose(w_x)) + ad.matmul(h_prev, ad.transpose(w_h)) + bias
    gate_i = ad.sigmoid(pre[..., 0:hidden])
    gate_f = ad.sigmoid(pre[..., hidden : 2 * hidden])
    candidate = ad.tanh(pre[..., 2 * hidden : 3 * hidden])
    gate_o = ad.sigmoid(pre[..., 3 * hidden : 4 * hidden])
    c = gate_f * c_prev + gate_i * candidate
    h = gate_o * ad.tanh(c)
    return h, c


def lstm_sequence(params: ParameterSet, X: np.ndarray) -> Tensor:
    """Run the cell over the columns of ``X`` and return the final hidden state.

    ``X`` is ``(features, steps)`` for one sample or ``(batch, features, steps)``.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 2
    if single:
        X = X[None, :, :]
    if X.ndim != 3:
        raise ShapeError(f"{params.name}: expected a (features, steps) matrix, got shape {X.shape}")
    if X.shape[2] == 0:
        raise InvalidInputError(f"{params.name}: empty input sequence")
    hidden = params["W_h"].shape[1]
    h: Tensor = Tensor(np.zeros((X.shape[0], hidden)))
    c: Tensor = Tensor(np.zeros((X.shape[0], hidden)))
    for step in range(X.shape[2]):
        h, c = lstm_step(params, X[:, :, step], h, c)
    return h[0] if single else h


@dataclass(slots=True)
class LSTM:
    params: ParameterSet

    @classmethod
    def create(cls, n_features: int, hidden: int, rng: np.random.Generator, *, name: str = "lstm") -> "LSTM":
        return cls(params=lstm_params(n_features, hidden, rng, name=name))

    @property
    def hidden(self) -> int:
        return self.params["W_h"].shape[1]

    def __call__(self, X: np.ndarray) -> Tensor:
        return lstm_sequence(self.params, X)


# --------------------------------------------------------------------------
# batch normalization
# --------------------------------------------------------------------------


@dataclass(slots=True)
class BatchNormState:
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = BN_MOMENTUM

    @classmethod
    def initial(cls, size: int, momentum: float = BN_MOMENTUM) -> "BatchNormState":
        return cls(running_mean=np.zeros(size), running_var=np.ones(size), momentum=momentum)


def batch_norm(
    x: object,
    gamma: object,
    beta: object,
    state: BatchNormState,
    mode: Literal["train", "infer"],
    epsilon: float = BN_EPSILON,
) -> Tensor:
    x = _as_input(x)
    if x.ndim != 2:
        raise ShapeError(f"batch_norm expects a (batch, features) input, got {x.shape}")
    if mode == "infer":
        scale = 1.0 / np.sqrt(state.running_var + epsilon)
        return (x - state.running_mean) * scale * gamma + beta
    if mode != "train":
        raise InvalidParameterError(f"unknown batch_norm mode {mode!r}")
    if x.shape[0] < 2:
        raise DegenerateBatchError(f"batch_norm in train mode needs at least 2 rows, got {x.shape[0]}")

    mu = ad.mean(x, axis=0, keepdims=True)
    centered = x - mu
    var = ad.mean(ad.square(centered), axis=0, keepdims=True)
    out = centered / ad.sqrt(var + epsilon) * gamma + beta

    m = state.momentum
    state.running_mean = m * state.running_mean + (1.0 - m) * mu.value.reshape(-1)
    state.running_var = m * state.running_var + (1.0 - m) * var.value.reshape(-1)
    return out


@dataclass(slots=True)
class BatchNorm:
    params: ParameterSet
    state: BatchNormState
    epsilon: float = BN_EPSILON

    @classmethod
    def create(cls, size: int, *, momentum: float = BN_MOMENTUM, epsilon: float = BN_EPSILON, name: str = "batch_norm") -> "BatchNorm":
        params = ParameterSet(
            name=name,
            tensors={
                "gamma": Parameter(np.ones(size), name=f"{name}.gamma"),
                "beta": Parameter(np.zeros(size), name=f"{name}.beta"),
            },
        )
        return cls(params=params, state=BatchNormState.initial(size, momentum), epsilon=epsilon)

    def __call__(self, x: object, *, training: bool) -> Tensor:
        mode = "train" if training else "infer"
        return batch_norm(x, self.params["gamma"], self.params["beta"], self.state, mode, self.epsilon)


# --------------------------------------------------------------------------
# sharpened softplus
# --------------------------------------------------------------------------


def softplus_sharpened(a: object, rho: float) -> object:
    """``(1/rho) * ln(1 + exp(rho * a))``; returns a Tensor for Tensor input."""
    if not rho > 0:
        raise InvalidParameterError(f"sharpening factor must be positive, got {rho}")
    if isinstance(a, Tensor):
        return ad.softplus(a, rho)
    value = np.logaddexp(0.0, rho * np.asarray(a, dtype=np.float64)) / rho
    return float(value) if value.ndim == 0 else value
