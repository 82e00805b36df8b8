"""File-based persistence for experiment run manifests."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from uuid import uuid4

from models.experiment import RunManifest, RunSummary

from .config_store import atomic_write_text

MANIFEST_NAME = "manifest.json"


class RunNotFoundError(LookupError):
    """Raised when a run directory or its manifest cannot be located."""


def new_run_id() -> str:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    return f"{stamp}-{uuid4().hex[:8]}"


class RunRepository:
    """One directory per experiment run, each holding a ``manifest.json``."""

    def __init__(self, storage_dir: Path) -> None:
        self._storage_dir = Path(storage_dir)
        self._storage_dir.mkdir(parents=True, exist_ok=True)

    @property
    def storage_dir(self) -> Path:
        return self._storage_dir

    def run_dir(self, run_id: str) -> Path:
        return self._storage_dir / run_id

    def _manifest_path(self, run_id: str) -> Path:
        return self.run_dir(run_id) / MANIFEST_NAME

    @staticmethod
    def _load(path: Path) -> RunManifest:
        with path.open("r", encoding="utf-8") as handle:
            return RunManifest.model_validate(json.load(handle))

    def save(self, manifest: RunManifest, run_dir: Path | None = None) -> Path:
        """Write ``manifest`` into ``run_dir`` (default: its slot under the storage dir)."""
        path = Path(run_dir or self.run_dir(manifest.run_id)) / MANIFEST_NAME
        atomic_write_text(path, manifest.model_dump_json(indent=2) + "\n")
        return path

    def get(self, run_id: str) -> RunManifest:
        path = self._manifest_path(run_id)
        if not path.exists():
            raise RunNotFoundError(run_id)
        return self._load(path)

    def list_all(self) -> list[RunSummary]:
        """Summaries of all stored runs, newest first."""
        manifests = [self._load(path) for path in self._storage_dir.glob(f"*/{MANIFEST_NAME}")]
        manifests.sort(key=lambda m: m.created_at, reverse=True)
        return [
            RunSummary(
                run_id=m.run_id,
                config_hash=m.config_hash,
                created_at=m.created_at,
                finished_at=m.finished_at,
                run_count=len(m.runs),
                failed_count=len(m.failed),
                audit_passed=m.audit_passed,
            )
            for m in manifests
        ]
