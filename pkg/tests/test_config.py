from __future__ import annotations

from pathlib import Path

import pytest

from core.config_store import atomic_write_json, atomic_write_text, load_experiment_config
from core.errors import ConfigurationError
from models import ExperimentConfig, ScheduleKind, ToolkitSettings

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"


def test_shipped_protocol_config() -> None:
    config = load_experiment_config(CONFIG_DIR / "experiment.toml")
    assert config.seasons == [2014, 2015, 2016, 2017]
    assert config.horizons == [7, 14, 21]
    assert len(config.models) == 11
    assert config.training.lstm_schedule.kind is ScheduleKind.COSINE_WARMUP
    assert config.data.synthetic is not None and config.data.synthetic.years == 15


def test_shipped_query_free_config() -> None:
    config = load_experiment_config(CONFIG_DIR / "experiment_nq.toml")
    specs = [config.forecaster(model, 14) for model in config.models]
    assert len(specs) == 8
    assert all(spec.is_neural and not spec.use_queries for spec in specs)
    assert config.seasons == load_experiment_config(CONFIG_DIR / "experiment.toml").seasons


def test_shipped_smoke_config() -> None:
    config = load_experiment_config(CONFIG_DIR / "smoke.toml")
    assert config.seasons == [2016]
    assert config.training.epochs == 12


def test_overrides_replace_top_level_keys() -> None:
    config = load_experiment_config(CONFIG_DIR / "smoke.toml", seeds=[5], models=None)
    assert config.seeds == [5]
    assert "lstm-c" in config.models


def test_csv_paths_are_relative_to_the_config(tmp_path: Path) -> None:
    path = atomic_write_text(tmp_path / "exp.toml", '[data]\nili_csv = "data/ili.csv"\nqueries_csv = "data/queries.csv"\n')
    config = load_experiment_config(path)
    assert config.data.ili_csv == tmp_path / "data" / "ili.csv"
    assert config.data.synthetic is None


@pytest.mark.parametrize(
    "text",
    [
        "unknown_key = 1\n",
        "horizons = [7, 7]\n",
        "models = [\"rnn-v\"]\n",
        "seasons = [\n",
        "[training]\nepochs = -1\n",
        "[data]\nqueries_csv = \"q.csv\"\n",
    ],
)
def test_invalid_configs(tmp_path: Path, text: str) -> None:
    path = atomic_write_text(tmp_path / "bad.toml", text)
    with pytest.raises(ConfigurationError):
        load_experiment_config(path)


def test_config_hash_ignores_jobs_and_output_dir(tmp_path: Path) -> None:
    base = ExperimentConfig()
    assert base.config_hash() == ExperimentConfig(jobs=8, output_dir=tmp_path).config_hash()
    assert base.config_hash() != ExperimentConfig(seeds=[0]).config_hash()
    assert len(base.config_hash()) == 64


def test_atomic_writes_leave_no_temporaries(tmp_path: Path) -> None:
    path = atomic_write_json(tmp_path / "nested" / "payload.json", {"a": 1})
    atomic_write_json(path, {"a": 2})
    assert path.read_text() == '{\n  "a": 2\n}\n'
    assert [p.name for p in path.parent.iterdir()] == ["payload.json"]


def test_settings_from_environment(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    monkeypatch.setenv("FLUCAST_RUNS_DIR", str(tmp_path))
    monkeypatch.setenv("FLUCAST_DEFAULT_JOBS", "3")
    settings = ToolkitSettings()
    assert settings.runs_dir == tmp_path
    assert settings.default_jobs == 3
