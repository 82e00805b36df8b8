"""Stateless scoring of submitted forecasts."""

from __future__ import annotations

import pandas as pd
from fastapi import APIRouter, HTTPException

from core.forecasts import ProbabilisticForecast
from core.metrics import calibration_curve, score_forecast
from models import CalibrationCurve, CalibrationRequest, MetricsRow, ScoreRequest

router = APIRouter(prefix="/scoring", tags=["scoring"])


@router.post("/metrics", response_model=MetricsRow)
def score(payload: ScoreRequest) -> MetricsRow:
    """Point metrics always; CRPS and NLL only when ``std`` is given."""
    forecast = ProbabilisticForecast(
        dates=pd.date_range("2000-01-01", periods=len(payload.truth), freq="D"),
        mean=payload.mean,
        std=payload.std,
        truth=payload.truth,
        model=payload.model,
        gamma=payload.gamma,
    )
    try:
        return score_forecast(forecast, gamma=payload.gamma)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@router.post("/calibration", response_model=CalibrationCurve)
def calibration(payload: CalibrationRequest) -> CalibrationCurve:
    try:
        return calibration_curve(payload.truth, payload.mean, payload.std, payload.levels)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
