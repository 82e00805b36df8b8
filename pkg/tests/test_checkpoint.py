from __future__ import annotations

import json
from datetime import date
from pathlib import Path

import numpy as np
import pytest

from core.checkpoint import CHECKPOINT_VERSION, load_checkpoint, save_checkpoint
from core.errors import CheckpointError
from core.networks import build_model
from core.predict import predict_data_uncertainty, predict_point
from core.preprocessing import MinMaxStats, PreprocessingState
from models import ForecasterSpec


@pytest.mark.parametrize("text", ["ff-d", "lstm-d"])
def test_round_trip_gives_identical_predictions(text: str, tmp_path: Path, rng: np.random.Generator) -> None:
    model = build_model(ForecasterSpec.parse(text, gamma=21), (3, 5), seed=4)
    if model.batch_norm is not None:
        model.batch_norm.state.running_mean = rng.normal(size=model.batch_norm.state.running_mean.shape)
    state = PreprocessingState(
        fit_end=date(2015, 8, 22),
        selected=["flu", "fever"],
        correlations={"flu": 0.9, "fever": 0.5},
        stats={"flu": MinMaxStats(0.0, 2.0), "fever": MinMaxStats(1.0, 3.0)},
    )
    path = save_checkpoint(model, tmp_path / "model.json", lag=5, delay=7, preprocessing=state)

    restored = load_checkpoint(path)
    assert restored.model.spec == model.spec
    assert (restored.lag, restored.delay) == (5, 7)
    assert restored.preprocessing == state
    x = rng.normal(size=(6, 3, 5))
    for expected, actual in zip(predict_data_uncertainty(model, x), predict_data_uncertainty(restored.model, x)):
        np.testing.assert_array_equal(expected, actual)


def test_point_model_round_trip(tmp_path: Path, rng: np.random.Generator) -> None:
    model = build_model(ForecasterSpec.parse("ff-v-nq"), (1, 4), seed=1)
    restored = load_checkpoint(save_checkpoint(model, tmp_path / "ffv.json", lag=4, delay=0))
    assert restored.preprocessing is None
    x = rng.normal(size=(3, 1, 4))
    np.testing.assert_array_equal(predict_point(model, x), predict_point(restored.model, x))


def _payload(tmp_path: Path) -> tuple[Path, dict]:
    path = save_checkpoint(build_model(ForecasterSpec.parse("ff-v"), (2, 3)), tmp_path / "m.json", lag=3, delay=0)
    return path, json.loads(path.read_text())


def test_unknown_version_is_rejected(tmp_path: Path) -> None:
    path, payload = _payload(tmp_path)
    payload["version"] = CHECKPOINT_VERSION + 1
    path.write_text(json.dumps(payload))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_tampered_parameters_are_rejected(tmp_path: Path) -> None:
    path, payload = _payload(tmp_path)
    name = next(iter(payload["parameters"]))
    payload["parameters"][name]["shape"] = [1]
    path.write_text(json.dumps(payload))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_foreign_files_are_rejected(tmp_path: Path) -> None:
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(CheckpointError):
        load_checkpoint(other)
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(CheckpointError):
        load_checkpoint(broken)


def test_baselines_have_no_checkpoint(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError):
        save_checkpoint(build_model(ForecasterSpec.parse("gp")), tmp_path / "gp.json", lag=1, delay=0)
