from __future__ import annotations

from datetime import date, datetime, timezone
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from api.main import create_app
from core.run_store import RunRepository
from models import MetricsRow, RunManifest, RunRecord, RunStatus, ToolkitSettings


@pytest.fixture
def runs_dir(tmp_path: Path) -> Path:
    return tmp_path / "runs"


@pytest.fixture
def client(runs_dir: Path) -> TestClient:
    return TestClient(create_app(ToolkitSettings(runs_dir=runs_dir)))


def _store(runs_dir: Path, run_id: str) -> None:
    record = RunRecord(
        run_id="naive/gamma7/seed0/2015",
        model="naive",
        gamma=7,
        seed=0,
        season=2015,
        status=RunStatus.OK,
        test_start=date(2015, 8, 23),
        test_end=date(2016, 8, 22),
        metrics=MetricsRow(model="naive", gamma=7, season=2015, mae=1.0, rmse=1.5, smape=20.0, r=0.8, sdp=3.0),
    )
    failed = record.model_copy(update={"run_id": "gp/gamma7/seed0/2015", "model": "gp", "status": RunStatus.FAILED, "metrics": None})
    manifest = RunManifest(
        run_id=run_id,
        config_hash="hash",
        toolkit_version="0.1.0",
        created_at=datetime(2024, 5, 1, tzinfo=timezone.utc),
        output_dir=str(runs_dir / run_id),
        config={},
        runs=[record, failed],
        audit_passed=True,
    )
    RunRepository(runs_dir).save(manifest)


def test_health(client: TestClient) -> None:
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_runs_listing_and_lookup(client: TestClient, runs_dir: Path) -> None:
    assert client.get("/runs/").json() == []
    _store(runs_dir, "first")
    listing = client.get("/runs/").json()
    assert [entry["run_id"] for entry in listing] == ["first"]
    assert listing[0]["failed_count"] == 1

    manifest = client.get("/runs/first").json()
    assert manifest["config_hash"] == "hash"
    metrics = client.get("/runs/first/metrics").json()
    assert [row["model"] for row in metrics] == ["naive"]


def test_unknown_run_is_404(client: TestClient) -> None:
    assert client.get("/runs/missing").status_code == 404
    assert client.get("/runs/missing/metrics").status_code == 404


def test_score_point_forecast(client: TestClient) -> None:
    response = client.post("/scoring/metrics", json={"model": "naive", "gamma": 7, "truth": [1.0, 2.0, 3.0], "mean": [1.0, 2.5, 2.5]})
    assert response.status_code == 200
    body = response.json()
    assert body["mae"] == pytest.approx(1.0 / 3.0)
    assert body["crps"] is None
    assert body["gamma"] == 7


def test_score_probabilistic_forecast(client: TestClient) -> None:
    response = client.post("/scoring/metrics", json={"truth": [0.0, 1.0], "mean": [0.0, 1.0], "std": [1.0, 1.0]})
    assert response.status_code == 200
    assert response.json()["crps"] == pytest.approx(0.23370, abs=1e-5)


def test_score_rejects_misaligned_input(client: TestClient) -> None:
    response = client.post("/scoring/metrics", json={"truth": [1.0, 2.0], "mean": [1.0]})
    assert response.status_code == 422


def test_calibration_endpoint(client: TestClient) -> None:
    response = client.post(
        "/scoring/calibration",
        json={"truth": [0.0, 1.0], "mean": [0.0, 0.0], "std": [1.0, 1.0], "levels": [0.0, 0.5, 0.9]},
    )
    assert response.status_code == 200
    assert response.json()["coverage"] == pytest.approx([0.5, 0.5, 1.0])
