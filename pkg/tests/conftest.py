from __future__ import annotations

from datetime import date

import numpy as np
import pandas as pd
import pytest

from models import ExperimentConfig, QueryProfile, SyntheticConfig


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", default=False, help="run slow protocol tests")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_synthetic() -> SyntheticConfig:
    queries = [
        QueryProfile(query_id="flu", lag=0, scale=1.0, noise=0.05),
        QueryProfile(query_id="fever", lag=2, scale=0.8, noise=0.1),
        QueryProfile(query_id="weather", noise=0.3, distractor=True),
    ]
    return SyntheticConfig(start_date=date(2010, 1, 1), years=6, seed=11, queries=queries)


@pytest.fixture
def small_config(small_synthetic: SyntheticConfig) -> ExperimentConfig:
    """One season, one horizon, a neural model and a baseline, two quick epochs."""
    return ExperimentConfig.model_validate(
        {
            "data": {"synthetic": small_synthetic.model_dump(mode="json")},
            "seasons": [2013],
            "horizons": [7],
            "models": ["ff-v", "naive"],
            "seeds": [0],
            "lag": 7,
            "delay": 7,
            "k": 5,
            "training": {"epochs": 2, "batch_size": 64},
        }
    )


@pytest.fixture
def daily_ramp() -> pd.Series:
    index = pd.date_range("2020-01-01", periods=30, freq="D", name="date")
    return pd.Series(np.arange(30, dtype=np.float64), index=index, name="ili_rate")
