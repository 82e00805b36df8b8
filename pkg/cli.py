"""Command-line entry point.

    python cli.py synth --seed 7 --out data/
    python cli.py train --config config/experiment.toml --model lstm-c --gamma 14 --out out/
    python cli.py forecast --checkpoint out/checkpoint.json --config config/experiment.toml --out out/
    python cli.py evaluate out/forecast.csv --gamma 14
    python cli.py experiment --config config/experiment.toml --jobs 4 --out runs/first
    python cli.py calibration out/forecast.csv --out out/calibration.csv

Exit codes: 0 success, 1 failed validation or runs, 2 usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from core.checkpoint import load_checkpoint, save_checkpoint
from core.config_store import atomic_write_json, atomic_write_text, load_experiment_config
from core.csv_io import load_csv, save_csv
from core.errors import FlucastError, InvalidInputError, MisuseError
from core.experiment import checkpoint_forecast, load_data, run_experiment, season_inputs, train_neural
from core.forecasts import ProbabilisticForecast
from core.metrics import calibration_curve, score_forecast
from core.reports import MISSING_CELL
from core.synthetic import synthesize
from models import METRIC_NAMES, ExperimentConfig, SyntheticConfig, ToolkitSettings, season_bounds

logger = logging.getLogger("flucast")


def _add_common(parser: argparse.ArgumentParser, *, out_required: bool = False) -> None:
    parser.add_argument("--config", type=Path, help="TOML experiment configuration")
    parser.add_argument("--out", type=Path, required=out_required, help="Output directory or file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flucast", description="Probabilistic ILI forecasting toolkit")
    parser.add_argument("--log-level", default=None, help="Logging level (default from FLUCAST_LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="Generate a synthetic ILI and query dataset")
    _add_common(synth, out_required=True)
    synth.add_argument("--seed", type=int, help="Generator seed")

    train = commands.add_parser("train", help="Train one neural model on pre-season data")
    _add_common(train, out_required=True)
    train.add_argument("--model", required=True, help="Model spec such as ff-d or lstm-c-nq")
    train.add_argument("--gamma", type=int, help="Forecasting horizon in days")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--season", type=int, help="Season start year (default: first configured season)")

    forecast = commands.add_parser("forecast", help="Forecast a season from a checkpoint")
    _add_common(forecast, out_required=True)
    forecast.add_argument("--checkpoint", type=Path, required=True)
    forecast.add_argument("--season", type=int, help="Season start year (default: first configured season)")
    forecast.add_argument("--seed", type=int, default=0, help="Seed for weight sampling")

    evaluate = commands.add_parser("evaluate", help="Score stored forecast CSV files")
    evaluate.add_argument("forecasts", type=Path, nargs="+")
    evaluate.add_argument("--gamma", type=int, help="Horizon recorded on the metrics rows")
    evaluate.add_argument("--out", type=Path, help="Write the metrics as CSV")

    experiment = commands.add_parser("experiment", help="Run the rolling-season protocol")
    _add_common(experiment)
    experiment.add_argument("--jobs", type=int, help="Parallel worker processes")
    experiment.add_argument("--seed", type=int, help="Run a single seed")
    experiment.add_argument("--gamma", type=int, help="Run a single horizon")
    experiment.add_argument("--model", help="Run a single model")

    calibration = commands.add_parser("calibration", help="Extract a calibration curve from a forecast CSV")
    calibration.add_argument("forecast", type=Path)
    calibration.add_argument("--out", type=Path, help="Write level,coverage CSV here")
    return parser


def _config(args: argparse.Namespace, **overrides: Any) -> ExperimentConfig:
    overrides = {key: value for key, value in overrides.items() if value is not None}
    if getattr(args, "config", None) is not None:
        return load_experiment_config(args.config, **overrides)
    return ExperimentConfig.model_validate(overrides)


def _season(args: argparse.Namespace, config: ExperimentConfig) -> int:
    return args.season if args.season is not None else config.seasons[0]


def _load_forecast(path: Path) -> ProbabilisticForecast:
    forecast = load_csv(path)
    if not isinstance(forecast, ProbabilisticForecast):
        raise InvalidInputError(f"{path} is not a date,truth,mean,std forecast file")
    return forecast


def cmd_synth(args: argparse.Namespace) -> int:
    config = _config(args)
    synthetic = config.data.synthetic or SyntheticConfig()
    if args.seed is not None:
        synthetic = synthetic.model_copy(update={"seed": args.seed})
    dataset = synthesize(synthetic)
    save_csv(dataset.ili, args.out / "ili.csv")
    save_csv(dataset.queries, args.out / "queries.csv")
    print(f"Wrote {len(dataset.ili)} weeks and {len(dataset.queries.columns)} queries to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _config(args)
    gamma = args.gamma or config.horizons[0]
    spec = config.forecaster(args.model, gamma)
    if not spec.is_neural:
        raise MisuseError(f"{spec.model_id} is fit at forecast time and has no training step")
    season = _season(args, config)
    inputs = season_inputs(spec, season, config, load_data(config))
    result = train_neural(spec, inputs, config, args.seed)
    path = save_checkpoint(result.model, args.out / "checkpoint.json", lag=config.lag, delay=config.delay, preprocessing=inputs.preprocessing)
    atomic_write_json(args.out / "loss_trace.json", {"model": spec.model_id, "gamma": gamma, "season": season, "loss": result.loss_trace})
    print(f"Trained {spec.model_id} on {len(inputs.train)} samples; final loss {result.final_loss:.6f}; checkpoint {path}")
    return 0


def cmd_forecast(args: argparse.Namespace) -> int:
    config = _config(args)
    checkpoint = load_checkpoint(args.checkpoint)
    forecast = checkpoint_forecast(checkpoint, load_data(config), season_bounds(_season(args, config)), seed=args.seed)
    out = args.out if args.out.suffix == ".csv" else args.out / "forecast.csv"
    save_csv(forecast, out)
    print(f"Wrote {len(forecast)} forecasts from {forecast.model} to {out}")
    return 0


def _metrics_frame(forecasts: Sequence[ProbabilisticForecast], gamma: int | None) -> pd.DataFrame:
    rows = []
    for forecast in forecasts:
        row = score_forecast(forecast, gamma=gamma)
        rows.append({"model": row.model, "gamma": row.gamma, **{m: row.value(m) for m in METRIC_NAMES}})
    frame = pd.DataFrame(rows, columns=["model", "gamma", *METRIC_NAMES])
    return frame.astype(object).where(frame.notna(), MISSING_CELL)


def cmd_evaluate(args: argparse.Namespace) -> int:
    frame = _metrics_frame([_load_forecast(path) for path in args.forecasts], args.gamma)
    if args.out is not None:
        atomic_write_text(args.out, frame.to_csv(index=False, lineterminator="\n"))
    print(frame.to_string(index=False))
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    overrides: dict[str, Any] = {
        "seeds": [args.seed] if args.seed is not None else None,
        "horizons": [args.gamma] if args.gamma is not None else None,
        "models": [args.model] if args.model is not None else None,
    }
    config = _config(args, **overrides)
    jobs = args.jobs or config.jobs or ToolkitSettings().default_jobs
    manifest = run_experiment(config, args.out, jobs=jobs)
    print(f"{len(manifest.runs)} runs, {len(manifest.failed)} failed; outputs in {manifest.output_dir}")
    for run in manifest.failed:
        print(f"  {run.run_id}: {run.error}")
    return 0 if not manifest.failed and manifest.audit_passed else 1


def cmd_calibration(args: argparse.Namespace) -> int:
    forecast = _load_forecast(args.forecast)
    if forecast.std is None or forecast.truth is None:
        raise InvalidInputError(f"{args.forecast} needs truth and std columns for a calibration curve")
    known = ~np.isnan(forecast.truth)
    curve = calibration_curve(forecast.truth[known], forecast.mean[known], forecast.std[known])
    frame = pd.DataFrame({"level": curve.levels, "coverage": curve.coverage})
    if args.out is not None:
        atomic_write_text(args.out, frame.to_csv(index=False, lineterminator="\n"))
    print(frame.to_string(index=False))
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "calibration": cmd_calibration,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = ToolkitSettings()
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (FlucastError, ValidationError, FileNotFoundError) as exc:
        logger.error(f"{args.command} failed: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
