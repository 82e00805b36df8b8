"""ADAM and the learning-rate schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from models.training import ScheduleKind, ScheduleSpec

from .autodiff import Parameter
from .errors import InvalidInputError, ShapeError, TrainingAbortedError


@dataclass(slots=True)
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: dict[Parameter, np.ndarray] = field(default_factory=dict)
    second_moment: dict[Parameter, np.ndarray] = field(default_factory=dict)


def adam_step(
    state: AdamState,
    params: Sequence[Parameter],
    gradients: Mapping[Parameter, np.ndarray],
    lr: float,
) -> None:
    """Apply one bias-corrected ADAM update in place."""
    for param in params:
        grad = gradients[param]
        if grad.shape != param.shape:
            raise ShapeError(f"gradient shape {grad.shape} does not match parameter {param.name} {param.shape}")
        if not np.all(np.isfinite(grad)):
            raise TrainingAbortedError(f"non-finite gradient for {param.name}")

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for param in params:
        if not param.trainable:
            continue
        grad = gradients[param]
        m = state.first_moment.get(param)
        v = state.second_moment.get(param)
        if m is None:
            m = np.zeros_like(param.value)
            v = np.zeros_like(param.value)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first_moment[param] = m
        state.second_moment[param] = v
        param.value -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)


def clip_global_norm(gradients: Mapping[Parameter, np.ndarray], max_norm: float) -> float:
    """Scale gradients in place so their joint L2 norm is at most ``max_norm``; returns the original norm."""
    total = math.sqrt(float(np.sum([np.sum(g * g) for g in gradients.values()])))
    if total > max_norm:
        scale = max_norm / total
        for grad in gradients.values():
            grad *= scale
    return total


def lr_at(schedule: ScheduleSpec, epoch: int, total_epochs: int) -> float:
    """Learning rate for ``epoch`` (0-based).

    The warmup ramp is counted in completed epochs: epoch ``e < warmup`` trains at
    ``base * (e + 1) / warmup``, so the first epoch already moves and the last warmup
    epoch reaches ``base`` exactly. Cosine decay from ``base`` to ``min_rate`` follows.
    """
    if not 0 <= epoch < total_epochs:
        raise InvalidInputError(f"epoch {epoch} outside [0, {total_epochs})")
    if schedule.kind is ScheduleKind.EXPONENTIAL:
        return schedule.base_rate * schedule.decay**epoch

    warmup = schedule.warmup_epochs
    if epoch < warmup:
        return schedule.base_rate * (epoch + 1) / warmup
    span = total_epochs - warmup
    progress = (epoch - warmup) / span if span > 0 else 0.0
    cosine = 0.5 * (1.0 + math.cos(math.pi * progress))
    return schedule.min_rate + (schedule.base_rate - schedule.min_rate) * cosine
