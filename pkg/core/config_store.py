"""Experiment config loading and atomic file writes."""

from __future__ import annotations

import contextlib
import json
import os
import tempfile
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from models.experiment import ExperimentConfig

from .errors import ConfigurationError


def atomic_write_text(path: str | os.PathLike[str], text: str) -> Path:
    """Write ``text`` to a temporary sibling and rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}", dir=str(path.parent))
    try:
        with os.fdopen(tmp_fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp_name)
    return path


def atomic_write_json(path: str | os.PathLike[str], payload: Any) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2, allow_nan=True) + "\n")


def load_experiment_config(path: str | os.PathLike[str], **overrides: Any) -> ExperimentConfig:
    """Parse and validate a TOML experiment file; ``overrides`` replace top-level keys."""
    path = Path(path)
    try:
        with path.open("rb") as handle:
            document = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    # CSV paths are relative to the config file
    data = document.get("data")
    if isinstance(data, dict):
        for key in ("ili_csv", "queries_csv"):
            if isinstance(data.get(key), str) and not Path(data[key]).is_absolute():
                data[key] = str(path.parent / data[key])
    document.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
