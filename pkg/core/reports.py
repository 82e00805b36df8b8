"""Cross-season, cross-seed tables written at the end of an experiment."""

from __future__ import annotations

import io
import json
import logging
from collections import defaultdict
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from models.experiment import RunManifest, RunRecord, RunStatus
from models.forecaster import ForecasterSpec, UncertaintyMode
from models.metrics import METRIC_NAMES, CalibrationCurve, MetricsRow, SignificanceResult

from .config_store import atomic_write_json, atomic_write_text
from .errors import IntegrityError
from .metrics import aggregate_report, average_calibration, calibration_error, significance, tradeoff_sweep

logger = logging.getLogger(__name__)

MISSING_CELL = "--"


def _frame_text(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def _cell(value: float | None) -> str:
    return MISSING_CELL if value is None else repr(float(value))


def seed_reports(runs: list[RunRecord]) -> dict[tuple[str, int], dict[int, MetricsRow]]:
    """Per (model, horizon): each seed's metrics averaged over its successful seasons."""
    grouped: dict[tuple[str, int], dict[int, list[MetricsRow]]] = defaultdict(lambda: defaultdict(list))
    for run in runs:
        if run.status is RunStatus.OK and run.metrics is not None:
            grouped[(run.model, run.gamma)][run.seed].append(run.metrics)
    return {key: {seed: aggregate_report(rows) for seed, rows in seeds.items()} for key, seeds in grouped.items()}


def metrics_table(reports: dict[tuple[str, int], dict[int, MetricsRow]]) -> pd.DataFrame:
    """Long format: one row per model, horizon and metric, averaged over seeds."""
    rows = []
    for (model, gamma), by_seed in sorted(reports.items()):
        for metric in METRIC_NAMES:
            values = [row.value(metric) for row in by_seed.values()]
            present = [v for v in values if v is not None]
            rows.append(
                {
                    "model": model,
                    "gamma": gamma,
                    "metric": metric,
                    "value": _cell(float(np.mean(present)) if present else None),
                    "std": _cell(float(np.std(present)) if present else None),
                    "seeds": len(present),
                }
            )
    return pd.DataFrame(rows, columns=["model", "gamma", "metric", "value", "std", "seeds"])


def significance_pairs(models: list[str]) -> list[tuple[str, str]]:
    """Each uncertainty variant against its own deterministic model, and FF against LSTM."""
    specs = {m: ForecasterSpec.parse(m) for m in models}
    present = set(models)
    pairs = []
    for model, spec in specs.items():
        if not spec.is_neural:
            continue
        suffix = "" if spec.use_queries else "-nq"
        deterministic = f"{spec.architecture.value}-v{suffix}"
        if spec.uncertainty is not UncertaintyMode.V and deterministic in present:
            pairs.append((model, deterministic))
        if spec.architecture.value == "ff":
            counterpart = f"lstm-{spec.uncertainty.value}{suffix}"
            if counterpart in present:
                pairs.append((model, counterpart))
    return pairs


def significance_table(reports: dict[tuple[str, int], dict[int, MetricsRow]], models: list[str], alpha: float) -> list[SignificanceResult]:
    results = []
    pairs = significance_pairs(models)
    gammas = sorted({gamma for _, gamma in reports})
    for gamma in gammas:
        testable = [
            (a, b)
            for a, b in pairs
            if len(reports.get((a, gamma), {})) >= 2 and len(reports.get((b, gamma), {})) >= 2
        ]
        for a, b in testable:
            for metric in METRIC_NAMES:
                values_a = [row.value(metric) for row in reports[(a, gamma)].values()]
                values_b = [row.value(metric) for row in reports[(b, gamma)].values()]
                if None in values_a or None in values_b:
                    continue
                results.append(
                    significance(values_a, values_b, alpha, len(testable), model_a=a, model_b=b, metric=metric, gamma=gamma)
                )
    if pairs and not results:
        logger.info("Significance tests skipped: fewer than 2 successful seeds per model")
    return results


def _load_curve(root: Path, run: RunRecord) -> CalibrationCurve:
    relative = run.artifacts.get("calibration")
    if relative is None:
        raise IntegrityError(f"{run.run_id}: probabilistic run has no calibration artifact")
    path = root / relative
    if not path.exists():
        raise IntegrityError(f"{run.run_id}: calibration artifact {relative} is missing")
    return CalibrationCurve.model_validate(json.loads(path.read_text(encoding="utf-8")))


def calibration_curves(manifest: RunManifest) -> dict[tuple[str, int], CalibrationCurve]:
    """Mean coverage over seeds (each seed averaged over seasons) with its spread."""
    root = Path(manifest.output_dir)
    grouped: dict[tuple[str, int], dict[int, list[CalibrationCurve]]] = defaultdict(lambda: defaultdict(list))
    for run in manifest.runs:
        if run.status is RunStatus.OK and run.metrics is not None and run.metrics.is_probabilistic:
            grouped[(run.model, run.gamma)][run.seed].append(_load_curve(root, run))
    curves = {}
    for key, by_seed in grouped.items():
        per_seed = [
            CalibrationCurve(levels=seasons[0].levels, coverage=average_calibration(seasons).coverage)
            for seasons in by_seed.values()
        ]
        curves[key] = average_calibration(per_seed)
    return curves


def _model_key(model: str, gamma: int) -> str:
    return f"{model}_gamma{gamma}"


def emit_tables(manifest: RunManifest) -> dict[str, str]:
    """Write metrics, significance, calibration and trade-off tables; returns name -> relative path."""
    root = Path(manifest.output_dir)
    tables: dict[str, str] = {}
    reports = seed_reports(manifest.runs)
    models = list(manifest.config.get("models", sorted({m for m, _ in reports})))
    alpha = float(manifest.config.get("significance_alpha", 0.05))

    atomic_write_text(root / "metrics.csv", _frame_text(metrics_table(reports)))
    tables["metrics"] = "metrics.csv"

    results = significance_table(reports, models, alpha)
    frame = pd.DataFrame([r.model_dump() for r in results], columns=list(SignificanceResult.model_fields))
    atomic_write_text(root / "significance.csv", _frame_text(frame))
    tables["significance"] = "significance.csv"

    curves = calibration_curves(manifest)
    miscalibration: dict[str, float] = {}
    for (model, gamma), curve in sorted(curves.items()):
        key = _model_key(model, gamma)
        frame = pd.DataFrame({"level": curve.levels, "coverage": curve.coverage, "coverage_std": curve.coverage_std})
        relative = f"calibration/{key}.csv"
        atomic_write_text(root / relative, _frame_text(frame))
        tables[f"calibration:{key}"] = relative
        miscalibration[key] = calibration_error(curve)

    atomic_write_text(root / "tradeoff.csv", _frame_text(tradeoff_sweep()))
    tables["tradeoff"] = "tradeoff.csv"

    report: dict[str, Any] = {
        "config_hash": manifest.config_hash,
        "audit_passed": manifest.audit_passed,
        "failed_runs": [{"run_id": r.run_id, "error": r.error} for r in manifest.failed],
        "metrics": {
            _model_key(model, gamma): {str(seed): row.model_dump(mode="json") for seed, row in sorted(by_seed.items())}
            for (model, gamma), by_seed in sorted(reports.items())
        },
        "calibration": {_model_key(m, g): c.model_dump(mode="json") for (m, g), c in sorted(curves.items())},
        "miscalibration": miscalibration,
        "significance": [r.model_dump(mode="json") for r in results],
    }
    atomic_write_json(root / "metrics.json", report)
    tables["report"] = "metrics.json"
    logger.info(f"Wrote {len(tables)} tables to {root}")
    return tables
