"""Tape-based reverse-mode differentiation over numpy arrays.

Operations are recorded at matrix granularity on the active :class:`Tape`.
Outside a tape the same functions evaluate eagerly without recording, which
is how inference runs.
"""

from __future__ import annotations

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError, ShapeError

BackwardFn = Callable[[np.ndarray], tuple["np.ndarray | None", ...]]

_ACTIVE_TAPE: ContextVar["Tape | None"] = ContextVar("flucast_active_tape", default=None)


class Tensor:
    """A float64 array that can take part in a recorded computation."""

    __slots__ = ("value", "grad", "name", "trainable")
    # ndarray on the left defers to the reflected Tensor operators
    __array_ufunc__ = None

    def __init__(self, value: object, *, name: str | None = None, trainable: bool = False) -> None:
        self.value = np.array(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.name = name
        self.trainable = trainable

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def item(self) -> float:
        return float(self.value.reshape(-1)[0])

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"{type(self).__name__}(shape={self.shape}{label})"

    def __add__(self, other: object) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: object) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: object) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: object) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: object) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: object) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: object) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other: object) -> "Tensor":
        return div(other, self)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __pow__(self, exponent: float) -> "Tensor":
        return power(self, exponent)

    def __matmul__(self, other: object) -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, index: object) -> "Tensor":
        return take(self, index)


class Parameter(Tensor):
    """A leaf tensor that optimizers update; ``trainable=False`` freezes it."""

    __slots__ = ()

    def __init__(self, value: object, *, name: str | None = None, trainable: bool = True) -> None:
        super().__init__(value, name=name, trainable=trainable)


@dataclass(slots=True)
class TapeEntry:
    op: str
    output: Tensor
    inputs: tuple[Tensor, ...]
    backward: BackwardFn


@dataclass
class Tape:
    """Ordered record of the primitive operations of one forward pass."""

    entries: list[TapeEntry] = field(default_factory=list)
    _tracked: set[int] = field(default_factory=set, repr=False)
    _leaves: dict[int, Tensor] = field(default_factory=dict, repr=False)
    _token: object = field(default=None, repr=False)

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc_info: object) -> None:
        _ACTIVE_TAPE.reset(self._token)  # type: ignore[arg-type]
        self._token = None

    def _requires_grad(self, tensor: Tensor) -> bool:
        if id(tensor) in self._tracked:
            return True
        if tensor.trainable:
            self._tracked.add(id(tensor))
            self._leaves[id(tensor)] = tensor
            return True
        return False

    def record(self, op: str, output: Tensor, inputs: tuple[Tensor, ...], backward: BackwardFn) -> None:
        flags = [self._requires_grad(tensor) for tensor in inputs]
        if not any(flags):
            return
        self._tracked.add(id(output))
        self.entries.append(TapeEntry(op=op, output=output, inputs=inputs, backward=backward))

    def is_tracked(self, tensor: Tensor) -> bool:
        return id(tensor) in self._tracked

    @property
    def parameters(self) -> list[Parameter]:
        """Trainable leaves reached during the forward pass."""
        return [leaf for leaf in self._leaves.values() if isinstance(leaf, Parameter)]

    def __len__(self) -> int:
        return len(self.entries)


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE.get()


@contextmanager
def no_tape() -> Iterator[None]:
    """Evaluate eagerly even when a tape is active higher up the stack."""
    token = _ACTIVE_TAPE.set(None)
    try:
        yield
    finally:
        _ACTIVE_TAPE.reset(token)


def as_tensor(value: object) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _emit(op: str, value: np.ndarray, inputs: tuple[Tensor, ...], backward: BackwardFn) -> Tensor:
    out = Tensor(value)
    tape = _ACTIVE_TAPE.get()
    if tape is not None:
        tape.record(op, out, inputs, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


# --------------------------------------------------------------------------
# elementwise primitives
# --------------------------------------------------------------------------


def add(a: object, b: object) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit("add", a.value + b.value, (a, b), backward)


def sub(a: object, b: object) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _emit("sub", a.value - b.value, (a, b), backward)


def mul(a: object, b: object) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)

    return _emit("mul", a.value * b.value, (a, b), backward)


def div(a: object, b: object) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ga = g / b.value
        gb = -g * a.value / (b.value * b.value)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _emit("div", a.value / b.value, (a, b), backward)


def neg(a: object) -> Tensor:
    a = as_tensor(a)
    return _emit("neg", -a.value, (a,), lambda g: (-g,))


def power(a: object, exponent: float) -> Tensor:
    a = as_tensor(a)
    exponent = float(exponent)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * exponent * a.value ** (exponent - 1.0),)

    return _emit("power", a.value**exponent, (a,), backward)


def square(a: object) -> Tensor:
    a = as_tensor(a)
    return _emit("square", a.value * a.value, (a,), lambda g: (2.0 * g * a.value,))


def sqrt(a: object) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.value)
    return _emit("sqrt", out, (a,), lambda g: (0.5 * g / out,))


def exp(a: object) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.value)
    return _emit("exp", out, (a,), lambda g: (g * out,))


def log(a: object) -> Tensor:
    a = as_tensor(a)
    return _emit("log", np.log(a.value), (a,), lambda g: (g / a.value,))


def tanh(a: object) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.value)
    return _emit("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a: object) -> Tensor:
    a = as_tensor(a)
    out = expit(a.value)
    return _emit("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a: object) -> Tensor:
    # subgradient at exactly zero is zero
    a = as_tensor(a)
    mask = a.value > 0.0
    return _emit("relu", np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def softplus(a: object, rho: float = 1.0) -> Tensor:
    """Sharpened softplus ``log(1 + exp(rho * a)) / rho`` evaluated stably."""
    a = as_tensor(a)
    scaled = rho * a.value
    out = np.logaddexp(0.0, scaled) / rho
    slope = expit(scaled)
    return _emit("softplus", out, (a,), lambda g: (g * slope,))


# --------------------------------------------------------------------------
# reductions and structural primitives
# --------------------------------------------------------------------------


def sum(a: object, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    out = a.value.sum(axis=axis, keepdims=keepdims)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _emit("sum", np.asarray(out), (a,), backward)


def mean(a: object, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[ax] for ax in axes]))
    if count == 0:
        raise InvalidInputError("mean of an empty tensor")
    return div(sum(a, axis=axis, keepdims=keepdims), float(count))


def matmul(a: object, b: object) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if b.ndim != 2 or a.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a2 = a.value if a.ndim == 2 else a.value[None, :]
        g2 = g if g.ndim == 2 else g[None, :]
        ga = (g2 @ b.value.T).reshape(a.shape)
        gb = a2.T @ g2
        return ga, gb

    return _emit("matmul", a.value @ b.value, (a, b), backward)


def transpose(a: object) -> Tensor:
    a = as_tensor(a)
    return _emit("transpose", a.value.T.copy(), (a,), lambda g: (g.T,))


def reshape(a: object, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    return _emit("reshape", a.value.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def take(a: object, index: object) -> Tensor:
    """Basic (slice/integer) indexing."""
    a = as_tensor(a)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros_like(a.value)
        full[index] += g
        return (full,)

    return _emit("take", np.array(a.value[index]), (a,), backward)


def concat(tensors: Sequence[object], axis: int = -1) -> Tensor:
    parts = tuple(as_tensor(t) for t in tensors)
    sizes = [p.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def backward(g: np.ndarray) -> tuple[np.ndarray, ...]:
        return tuple(np.split(g, splits, axis=axis))

    return _emit("concat", np.concatenate([p.value for p in parts], axis=axis), parts, backward)


def batched_linear(h: object, weights: object, n_in: int, n_out: int) -> Tensor:
    """Apply a per-row linear map.

    ``weights`` has one flattened ``[W (n_in x n_out, row-major), b (n_out)]``
    vector per row of ``h``.
    """
    h, weights = as_tensor(h), as_tensor(weights)
    n_w = n_in * n_out + n_out
    if h.ndim != 2 or h.shape[1] != n_in or weights.shape != (h.shape[0], n_w):
        raise ShapeError(f"batched_linear expects h (B, {n_in}) and weights (B, {n_w}); got {h.shape}, {weights.shape}")
    batch = h.shape[0]
    w = weights.value[:, : n_in * n_out].reshape(batch, n_in, n_out)
    b = weights.value[:, n_in * n_out :]
    out = np.einsum("bi,bio->bo", h.value, w) + b

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        gh = np.einsum("bo,bio->bi", g, w)
        gw = np.einsum("bi,bo->bio", h.value, g).reshape(batch, n_in * n_out)
        return gh, np.concatenate([gw, g], axis=1)

    return _emit("batched_linear", out, (h, weights), backward)


# --------------------------------------------------------------------------
# reverse pass
# --------------------------------------------------------------------------


def backward(tape: Tape, loss: Tensor, wrt: Iterable[Parameter] | None = None) -> dict[Parameter, np.ndarray]:
    """Replay ``tape`` in reverse and return d(loss)/d(parameter).

    Parameters that the loss does not reach get a zero gradient. Each
    parameter's ``grad`` attribute is set as well.
    """
    if loss.size != 1:
        raise InvalidInputError(f"loss must be scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    for entry in reversed(tape.entries):
        upstream = grads.pop(id(entry.output), None)
        if upstream is None:
            continue
        for tensor, contribution in zip(entry.inputs, entry.backward(upstream)):
            if contribution is None or not tape.is_tracked(tensor):
                continue
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + contribution
            else:
                grads[key] = np.array(contribution, dtype=np.float64)

    targets = list(wrt) if wrt is not None else tape.parameters
    result: dict[Parameter, np.ndarray] = {}
    for param in targets:
        grad = grads.get(id(param))
        if grad is None:
            grad = np.zeros_like(param.value)
        param.grad = grad
        result[param] = grad
    return result


def gradient_check(
    function: Callable[[], Tensor],
    point: Parameter | Sequence[Parameter],
    epsilon: float = 1e-5,
    *,
    abs_floor: float = 1e-3,
) -> float:
    """Max relative error between tape gradients and central differences.

    The denominator is floored at ``abs_floor`` so gradients that are
    numerically zero are compared absolutely.
    """
    params = [point] if isinstance(point, Parameter) else list(point)
    with Tape() as tape:
        loss = function()
    analytic = backward(tape, loss, wrt=params)

    worst = 0.0
    with no_tape():
        for param in params:
            flat = param.value.reshape(-1)
            grad = analytic[param].reshape(-1)
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + epsilon
                upper = function().item()
                flat[i] = original - epsilon
                lower = function().item()
                flat[i] = original
                numeric = (upper - lower) / (2.0 * epsilon)
                scale = max(abs(grad[i]), abs(numeric), abs_floor)
                worst = max(worst, abs(grad[i] - numeric) / scale)
    return worst
