"""Read-only routes over stored experiment runs."""

from __future__ import annotations

from fastapi import APIRouter, Depends, HTTPException

from core.run_store import RunNotFoundError, RunRepository
from models import MetricsRow, RunManifest, RunStatus, RunSummary

from ..dependencies import get_run_repository

router = APIRouter(prefix="/runs", tags=["runs"])


def _manifest(run_id: str, repository: RunRepository) -> RunManifest:
    try:
        return repository.get(run_id)
    except RunNotFoundError as exc:
        raise HTTPException(status_code=404, detail="Run not found") from exc


@router.get("/", response_model=list[RunSummary])
def list_runs(
    repository: RunRepository = Depends(get_run_repository),
) -> list[RunSummary]:
    """List stored experiment runs, newest first."""
    return repository.list_all()


@router.get("/{run_id}", response_model=RunManifest)
def get_run(
    run_id: str,
    repository: RunRepository = Depends(get_run_repository),
) -> RunManifest:
    return _manifest(run_id, repository)


@router.get("/{run_id}/metrics", response_model=list[MetricsRow])
def get_run_metrics(
    run_id: str,
    repository: RunRepository = Depends(get_run_repository),
) -> list[MetricsRow]:
    """Per-season metrics of every successful job in the run."""
    manifest = _manifest(run_id, repository)
    return [run.metrics for run in manifest.runs if run.status is RunStatus.OK and run.metrics is not None]
