"""Dependency injection helpers for the FastAPI app."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from fastapi import Depends

from core.run_store import RunRepository
from models import ToolkitSettings


@lru_cache
def get_settings() -> ToolkitSettings:
    """Return application settings (cached for process lifetime)."""

    return ToolkitSettings()


@lru_cache(maxsize=None)
def _run_repository_factory(storage_dir: str) -> RunRepository:
    return RunRepository(Path(storage_dir))


def get_run_repository(settings: ToolkitSettings = Depends(get_settings)) -> RunRepository:
    return _run_repository_factory(str(settings.runs_dir))
