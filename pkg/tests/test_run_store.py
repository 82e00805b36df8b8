from __future__ import annotations

from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import pytest

from core.run_store import RunNotFoundError, RunRepository, new_run_id
from models import RunManifest, RunRecord, RunStatus


def _manifest(run_id: str, created_at: datetime, *, failed: int = 0) -> RunManifest:
    runs = [
        RunRecord(
            run_id=f"{run_id}-{i}",
            model="ff-v",
            gamma=7,
            seed=i,
            season=2015,
            status=RunStatus.FAILED if i < failed else RunStatus.OK,
            test_start=date(2015, 8, 23),
            test_end=date(2016, 8, 22),
        )
        for i in range(3)
    ]
    return RunManifest(
        run_id=run_id,
        config_hash="abc123",
        toolkit_version="0.1.0",
        created_at=created_at,
        output_dir=f"runs/{run_id}",
        config={"seasons": [2015]},
        runs=runs,
        audit_passed=True,
    )


def test_save_and_get(tmp_path: Path) -> None:
    repository = RunRepository(tmp_path / "runs")
    manifest = _manifest("first", datetime(2024, 1, 1, tzinfo=timezone.utc), failed=1)
    path = repository.save(manifest)
    assert path == tmp_path / "runs" / "first" / "manifest.json"
    loaded = repository.get("first")
    assert loaded == manifest
    assert len(loaded.failed) == 1


def test_list_newest_first(tmp_path: Path) -> None:
    repository = RunRepository(tmp_path)
    start = datetime(2024, 1, 1, tzinfo=timezone.utc)
    for offset, run_id in enumerate(["old", "newest", "middle"]):
        created = start + timedelta(days={"old": 0, "newest": 2, "middle": 1}[run_id])
        repository.save(_manifest(run_id, created, failed=offset))
    summaries = repository.list_all()
    assert [s.run_id for s in summaries] == ["newest", "middle", "old"]
    assert summaries[0].run_count == 3
    assert summaries[0].failed_count == 1
    assert summaries[1].failed_count == 2


def test_missing_run(tmp_path: Path) -> None:
    with pytest.raises(RunNotFoundError):
        RunRepository(tmp_path).get("nope")


def test_empty_repository(tmp_path: Path) -> None:
    assert RunRepository(tmp_path / "fresh").list_all() == []


def test_save_into_an_explicit_directory(tmp_path: Path) -> None:
    repository = RunRepository(tmp_path / "store")
    target = tmp_path / "elsewhere"
    repository.save(_manifest("x", datetime(2024, 1, 1, tzinfo=timezone.utc)), target)
    assert (target / "manifest.json").exists()
    with pytest.raises(RunNotFoundError):
        repository.get("x")


def test_run_ids_are_unique() -> None:
    assert len({new_run_id() for _ in range(20)}) == 20
