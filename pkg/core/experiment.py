"""Rolling-season evaluation: one job per (season, horizon, model, seed).

Each test season runs from August 23 to August 22. Neural models are
trained on every origin whose target falls before the season start, query
selection and normalization are fit on pre-season data, and the season is
forecast one day at a time. Failed jobs are recorded and the rest continue.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import logging
import time
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from models.experiment import ExperimentConfig, RunManifest, RunRecord, RunStatus, season_bounds
from models.forecaster import ForecasterSpec
from models.settings import ToolkitSettings

from . import TOOLKIT_VERSION
from .checkpoint import Checkpoint, save_checkpoint
from .config_store import atomic_write_json
from .csv_io import load_csv, save_csv
from .errors import ConfigurationError, FlucastError, InsufficientDataError, IntegrityError
from .forecasts import ProbabilisticForecast
from .metrics import calibration_curve, score_forecast
from .networks import build_model
from .predict import predict
from .preprocessing import PreprocessingState, fit_preprocessing, weekly_to_daily
from .reports import emit_tables
from .run_store import RunRepository, new_run_id
from .series import DAY
from .synthetic import synthesize
from .trainer import TrainResult, train
from .windows import WindowedDataset, build_windows

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Job:
    season: int
    gamma: int
    model: str
    seed: int

    @property
    def run_id(self) -> str:
        return f"{self.model}/gamma{self.gamma}/seed{self.seed}/{self.season}"


@dataclass(slots=True)
class ExperimentData:
    """Daily ILI rates and the raw daily query panel shared by every job."""

    ili: pd.Series
    panel: pd.DataFrame


def _is_weekly(series: pd.Series) -> bool:
    return len(series) >= 2 and (series.index[1] - series.index[0]).days == 7


def load_data(config: ExperimentConfig) -> ExperimentData:
    source = config.data
    if source.synthetic is not None:
        dataset = synthesize(source.synthetic)
        weekly, panel = dataset.ili, dataset.queries
    else:
        weekly = load_csv(source.ili_csv)
        if not isinstance(weekly, pd.Series) or weekly.name != "ili_rate":
            raise ConfigurationError(f"{source.ili_csv} is not a date,ili_rate series")
        panel = load_csv(source.queries_csv) if source.queries_csv is not None else None
        if panel is not None and not isinstance(panel, pd.DataFrame):
            raise ConfigurationError(f"{source.queries_csv} is not a query panel")
    ili = weekly_to_daily(weekly) if _is_weekly(weekly) else weekly
    if panel is None:
        panel = pd.DataFrame(index=ili.index)
    check_coverage(config, ili, panel)
    return ExperimentData(ili=ili, panel=panel)


def check_coverage(config: ExperimentConfig, ili: pd.Series, panel: pd.DataFrame) -> None:
    """Every season needs ``lag + delay`` days of lead-in and a ``max(horizons)`` tail."""
    first, _ = season_bounds(min(config.seasons))
    _, last = season_bounds(max(config.seasons))
    need_start = pd.Timestamp(first) - (config.lag + config.delay) * DAY
    need_end = pd.Timestamp(last) + max(config.horizons) * DAY
    for label, index in (("ILI series", ili.index), ("query panel", panel.index)):
        if len(panel.columns) == 0 and label == "query panel":
            continue
        if index[0] > need_start or index[-1] < need_end:
            raise InsufficientDataError(
                f"{label} covers {index[0].date()} to {index[-1].date()}, seasons need {need_start.date()} to {need_end.date()}"
            )


def enumerate_jobs(config: ExperimentConfig) -> list[Job]:
    """The full grid; deterministic baselines run once per (season, horizon) with the first seed."""
    jobs = []
    for season in config.seasons:
        for gamma in config.horizons:
            for model in config.models:
                spec = config.forecaster(model, gamma)
                seeds = config.seeds if spec.is_neural else config.seeds[:1]
                jobs.extend(Job(season, gamma, model, seed) for seed in seeds)
    return jobs


def job_seed(job: Job) -> int:
    """Seed of a job's rng streams, independent of scheduling order."""
    digest = hashlib.sha256(f"{job.seed}:{job.model}:{job.gamma}:{job.season}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


def training_origins(data: ExperimentData, config: ExperimentConfig, gamma: int, season_start: pd.Timestamp) -> tuple[pd.Timestamp, pd.Timestamp]:
    """First and last origin whose inputs exist and whose target precedes ``season_start``."""
    lead = (config.lag - 1) * DAY
    start = data.ili.index[0] + config.delay * DAY + lead
    if len(data.panel.columns):
        start = max(start, data.panel.index[0] + lead)
    end = season_start - (gamma + 1) * DAY
    if end < start:
        raise InsufficientDataError(f"no training origins before {season_start.date()}")
    return start, end


def _artifact_dir(output_dir: Path, job: Job) -> Path:
    return output_dir / "runs" / job.run_id


def _write_forecast(forecast: ProbabilisticForecast, folder: Path, output_dir: Path, record: RunRecord, config: ExperimentConfig) -> None:
    path = save_csv(forecast, folder / "forecast.csv")
    record.artifacts["forecast"] = str(path.relative_to(output_dir))
    if forecast.is_probabilistic:
        curve = calibration_curve(forecast.truth, forecast.mean, forecast.std, config.calibration_levels)
        calibration = atomic_write_json(folder / "calibration.json", curve.model_dump(mode="json"))
        record.artifacts["calibration"] = str(calibration.relative_to(output_dir))


def _run_baseline(job: Job, config: ExperimentConfig, data: ExperimentData, origins: pd.DatetimeIndex) -> ProbabilisticForecast:
    return build_model(config.forecaster(job.model, job.gamma)).forecast(data.ili, origins, config.delay)


@dataclass(slots=True)
class SeasonInputs:
    """Training and test windows of one season with the preprocessing that built them."""

    train: WindowedDataset
    test: WindowedDataset
    preprocessing: PreprocessingState | None = None


def season_inputs(spec: ForecasterSpec, season: int, config: ExperimentConfig, data: ExperimentData) -> SeasonInputs:
    """Fit query preprocessing on pre-season data and window the training and test periods."""
    season_start, season_end = (pd.Timestamp(d) for d in season_bounds(season))
    train_start, train_end = training_origins(data, config, spec.gamma, season_start)

    panel, state = pd.DataFrame(index=data.ili.index), None
    if spec.use_queries and len(data.panel.columns):
        panel, state = fit_preprocessing(
            data.ili,
            data.panel,
            data.panel.index[0],
            season_start - DAY,
            threshold=config.selection_threshold,
            smooth_before_normalize=config.smooth_before_normalize,
        )
    window = (config.lag, config.delay, spec.gamma)
    return SeasonInputs(
        train=build_windows(data.ili, panel, *window, (train_start, train_end)),
        test=build_windows(data.ili, panel, *window, (season_start, season_end)),
        preprocessing=state,
    )


def train_neural(spec: ForecasterSpec, inputs: SeasonInputs, config: ExperimentConfig, seed: int) -> TrainResult:
    model = build_model(spec, inputs.train.input_dims, seed=seed)
    return train(model, inputs.train, config.training.train_config(spec.architecture, seed))


def _run_neural(job: Job, config: ExperimentConfig, data: ExperimentData, record: RunRecord, folder: Path, output_dir: Path) -> ProbabilisticForecast:
    spec = config.forecaster(job.model, job.gamma)
    inputs = season_inputs(spec, job.season, config, data)
    if inputs.preprocessing is not None:
        record.preprocessing_fit_end = inputs.preprocessing.fit_end
        record.selected_queries = list(inputs.preprocessing.selected)
    record.train_start = inputs.train.origins[0].date()
    record.train_target_end = inputs.train.target_dates[-1].date()

    seed = job_seed(job)
    result = train_neural(spec, inputs, config, seed)
    record.loss_trace = result.loss_trace

    mean, std = predict(result.model, inputs.test.X, k=spec.k, rng=np.random.default_rng(seed + 1))
    checkpoint = save_checkpoint(result.model, folder / "checkpoint.json", lag=config.lag, delay=config.delay, preprocessing=inputs.preprocessing)
    record.artifacts["checkpoint"] = str(checkpoint.relative_to(output_dir))
    return ProbabilisticForecast(
        dates=inputs.test.target_dates,
        mean=mean,
        std=std,
        truth=inputs.test.y,
        model=spec.model_id,
        gamma=job.gamma,
    )


def checkpoint_forecast(
    checkpoint: Checkpoint,
    data: ExperimentData,
    period: tuple[date | pd.Timestamp, date | pd.Timestamp],
    *,
    seed: int = 0,
) -> ProbabilisticForecast:
    """Forecast every origin in ``period`` with a restored model; truth is filled where known."""
    model, state = checkpoint.model, checkpoint.preprocessing
    panel = state.transform(data.panel) if state is not None else pd.DataFrame(index=data.ili.index)
    windows = build_windows(data.ili, panel, checkpoint.lag, checkpoint.delay, model.spec.gamma, period, require_targets=False)
    mean, std = predict(model, windows.X, k=model.spec.k, rng=np.random.default_rng(seed))
    return ProbabilisticForecast(
        dates=windows.target_dates,
        mean=mean,
        std=std,
        truth=windows.y,
        model=model.spec.model_id,
        gamma=model.spec.gamma,
    )


def run_job(job: Job, config: ExperimentConfig, data: ExperimentData, output_dir: Path) -> RunRecord:
    """Train, forecast and score one job; failures are captured on the record."""
    season_start, season_end = season_bounds(job.season)
    record = RunRecord(
        run_id=job.run_id,
        model=job.model,
        gamma=job.gamma,
        seed=job.seed,
        season=job.season,
        status=RunStatus.OK,
        test_start=season_start,
        test_end=season_end,
    )
    started = time.perf_counter()
    folder = _artifact_dir(output_dir, job)
    try:
        spec = config.forecaster(job.model, job.gamma)
        if spec.is_neural:
            forecast = _run_neural(job, config, data, record, folder, output_dir)
        else:
            origins = pd.date_range(season_start, season_end, freq="D", name="date")
            forecast = _run_baseline(job, config, data, origins).with_truth(data.ili)
        forecast.model = spec.model_id
        record.metrics = score_forecast(forecast, season=job.season, gamma=job.gamma)
        _write_forecast(forecast, folder, output_dir, record, config)
    except FlucastError as exc:
        record.status = RunStatus.FAILED
        record.error = f"{type(exc).__name__}: {exc}"
        logger.warning(f"Run {job.run_id} failed: {record.error}")
    record.wall_clock_seconds = time.perf_counter() - started
    logger.info(f"Run {job.run_id} finished ({record.status.value}) in {record.wall_clock_seconds:.1f}s")
    return record


def audit_leakage(manifest: RunManifest) -> list[str]:
    """Violations of the training/test boundary across all successful runs."""
    problems = []
    for run in manifest.runs:
        if run.status is not RunStatus.OK:
            continue
        if run.train_target_end is not None and run.train_target_end >= run.test_start:
            problems.append(f"{run.run_id}: training target {run.train_target_end} is not before {run.test_start}")
        if run.preprocessing_fit_end is not None and run.preprocessing_fit_end >= run.test_start:
            problems.append(f"{run.run_id}: query statistics fit through {run.preprocessing_fit_end}")
    return problems


def verify_artifacts(manifest: RunManifest) -> None:
    root = Path(manifest.output_dir)
    for run in manifest.runs:
        for name, relative in run.artifacts.items():
            if not (root / relative).exists():
                raise IntegrityError(f"{run.run_id}: {name} artifact {relative} is missing")


def run_experiment(config: ExperimentConfig, output_dir: Path | None = None, *, jobs: int | None = None) -> RunManifest:
    """Run the full grid, write per-run artifacts, the tables and ``manifest.json``."""
    output_dir = Path(output_dir or config.output_dir or ToolkitSettings().runs_dir / new_run_id())
    output_dir.mkdir(parents=True, exist_ok=True)
    workers = jobs or config.jobs or 1
    created = datetime.now(timezone.utc)
    started = time.perf_counter()

    data = load_data(config)
    grid = enumerate_jobs(config)
    logger.info(f"Running {len(grid)} jobs with {workers} worker(s) into {output_dir}")

    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            future_map = {executor.submit(run_job, job, config, data, output_dir): index for index, job in enumerate(grid)}
            records: list[RunRecord | None] = [None] * len(grid)
            for future in concurrent.futures.as_completed(future_map):
                records[future_map[future]] = future.result()
    else:
        records = [run_job(job, config, data, output_dir) for job in grid]

    manifest = RunManifest(
        run_id=output_dir.name,
        config_hash=config.config_hash(),
        toolkit_version=TOOLKIT_VERSION,
        created_at=created,
        output_dir=str(output_dir),
        config=config.model_dump(mode="json"),
        runs=records,
    )
    problems = audit_leakage(manifest)
    for problem in problems:
        logger.error(f"Leakage audit: {problem}")
    manifest.audit_passed = not problems

    manifest.tables = emit_tables(manifest)
    verify_artifacts(manifest)
    manifest.finished_at = datetime.now(timezone.utc)
    manifest.wall_clock_seconds = time.perf_counter() - started
    RunRepository(output_dir.parent).save(manifest, output_dir)
    logger.info(f"Experiment finished: {len(manifest.runs) - len(manifest.failed)} ok, {len(manifest.failed)} failed")
    return manifest
