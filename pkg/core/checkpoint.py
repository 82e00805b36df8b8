"""Versioned JSON checkpoints for trained neural forecasters."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from models.forecaster import ForecasterSpec

from .config_store import atomic_write_json
from .errors import CheckpointError, ConfigurationError, ShapeError
from .networks import NeuralForecaster, build_model
from .preprocessing import PreprocessingState

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "flucast-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(slots=True)
class Checkpoint:
    """A restored model plus what is needed to rebuild its inputs."""

    model: NeuralForecaster
    lag: int
    delay: int
    preprocessing: PreprocessingState | None = None


def _encode(array: np.ndarray) -> dict[str, Any]:
    return {"shape": list(array.shape), "values": np.asarray(array, dtype=np.float64).ravel().tolist()}


def _decode(entry: dict[str, Any], name: str) -> np.ndarray:
    try:
        return np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"cannot decode array {name!r}: {exc}") from exc


def checkpoint_payload(
    model: NeuralForecaster,
    *,
    lag: int,
    delay: int,
    preprocessing: PreprocessingState | None = None,
) -> dict[str, Any]:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "spec": model.spec.model_dump(mode="json"),
        "input_dims": list(model.input_dims),
        "lag": lag,
        "delay": delay,
        "parameters": {name: _encode(param.value) for name, param in model.named_parameters()},
        "buffers": {name: _encode(value) for name, value in model.buffers().items()},
        "preprocessing": preprocessing.to_dict() if preprocessing is not None else None,
    }


def save_checkpoint(
    model: NeuralForecaster,
    path: str | Path,
    *,
    lag: int,
    delay: int,
    preprocessing: PreprocessingState | None = None,
) -> Path:
    if not isinstance(model, NeuralForecaster):
        raise CheckpointError(f"only neural forecasters have checkpoints, got {type(model).__name__}")
    path = Path(path)
    atomic_write_json(path, checkpoint_payload(model, lag=lag, delay=delay, preprocessing=preprocessing))
    logger.debug(f"Wrote checkpoint for {model.spec.model_id} to {path}")
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a flucast checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path} has checkpoint version {payload.get('version')}, expected {CHECKPOINT_VERSION}")

    try:
        spec = ForecasterSpec.model_validate(payload["spec"])
        input_dims = tuple(int(d) for d in payload["input_dims"])
        model = build_model(spec, input_dims)
        parameters = {name: _decode(entry, name) for name, entry in payload["parameters"].items()}
        buffers = {name: _decode(entry, name) for name, entry in payload.get("buffers", {}).items()}
        model.load_state(parameters, buffers)
        preprocessing = payload.get("preprocessing")
        return Checkpoint(
            model=model,
            lag=int(payload["lag"]),
            delay=int(payload["delay"]),
            preprocessing=PreprocessingState.from_dict(preprocessing) if preprocessing else None,
        )
    except (KeyError, ValidationError, ConfigurationError, ShapeError) as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
