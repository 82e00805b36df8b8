"""CSV ingestion and emission for series, query panels and forecasts.

Schemas are recognised from the header:

* ``date,ili_rate`` weekly (7-day spacing) or daily ILI rates
* ``date,value`` a daily series
* ``date,truth,mean,std`` a forecast (empty cells for missing truth/std)
* ``date,<query ids...>`` a daily query panel

Dates are ISO-8601, numbers dot-decimal, files UTF-8 with LF endings.
"""

from __future__ import annotations

import io
import math
from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd

from .config_store import atomic_write_text
from .errors import DataGapError, InvalidInputError, ParseError
from .forecasts import ProbabilisticForecast
from .series import first_gap

FORECAST_COLUMNS = ["truth", "mean", "std"]
OPTIONAL_FORECAST_COLUMNS = {"truth", "std"}


def _parse_float(text: object, path: Path, line: int, column: str, *, optional: bool) -> float:
    if not isinstance(text, str):
        raise ParseError(f"missing field {column!r}", path, line)
    text = text.strip()
    if not text:
        if optional:
            return math.nan
        raise ParseError(f"empty value in column {column!r}", path, line)
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {text!r} in column {column!r} as a number", path, line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r} in column {column!r}", path, line)
    return value


def _read_rows(path: Path) -> pd.DataFrame:
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=True, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise ParseError("file is empty", path, 1) from None
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ParseError(str(exc).strip(), path) from exc
    if list(raw.columns[:1]) != ["date"]:
        raise ParseError("header must start with 'date'", path, 1)
    if len(raw.columns) < 2:
        raise ParseError("header needs at least one value column", path, 1)
    if raw.columns.has_duplicates:
        raise ParseError("duplicate column names in header", path, 1)
    return raw


def _parse_frame(raw: pd.DataFrame, path: Path, optional: set[str] = frozenset()) -> pd.DataFrame:
    dates: list[date] = []
    values: dict[str, list[float]] = {column: [] for column in raw.columns[1:]}
    seen: set[date] = set()
    for row_number, row in enumerate(raw.itertuples(index=False, name=None)):
        line = row_number + 2
        try:
            day = date.fromisoformat(str(row[0]).strip())
        except ValueError:
            raise ParseError(f"invalid ISO date {row[0]!r}", path, line) from None
        if day in seen:
            raise ParseError(f"duplicate date {day.isoformat()}", path, line)
        if dates and day < dates[-1]:
            raise ParseError(f"date {day.isoformat()} is out of order", path, line)
        seen.add(day)
        dates.append(day)
        for column, cell in zip(raw.columns[1:], row[1:]):
            values[column].append(_parse_float(cell, path, line, column, optional=column in optional))
    if not dates:
        raise ParseError("no data rows", path, 2)
    index = pd.DatetimeIndex(pd.to_datetime(dates), name="date")
    return pd.DataFrame({c: np.asarray(v, dtype=np.float64) for c, v in values.items()}, index=index)


def _spacing(index: pd.DatetimeIndex) -> set[int]:
    return set(np.asarray((index[1:] - index[:-1]).days).tolist())


def load_csv(path: str | Path) -> pd.Series | pd.DataFrame | ProbabilisticForecast:
    """Load any of the supported schemas.

    Weekly ILI series come back as a ``Series`` named ``ili_rate`` with
    7-day spacing, daily data must have no gaps.
    """
    path = Path(path)
    raw = _read_rows(path)
    columns = list(raw.columns[1:])

    if columns == FORECAST_COLUMNS:
        frame = _parse_frame(raw, path, OPTIONAL_FORECAST_COLUMNS)
        std = frame["std"].to_numpy()
        truth = frame["truth"].to_numpy()
        if np.isnan(std).any() and not np.isnan(std).all():
            raise ParseError("std must be given for every row or for none", path)
        return ProbabilisticForecast(
            dates=frame.index,
            mean=frame["mean"].to_numpy(),
            std=None if np.isnan(std).all() else std,
            truth=None if np.isnan(truth).all() else truth,
            model=path.stem,
        )

    frame = _parse_frame(raw, path)
    if columns == ["ili_rate"] and len(frame) >= 2 and min(_spacing(frame.index)) >= 7:
        steps = np.asarray((frame.index[1:] - frame.index[:-1]).days)
        bad = np.flatnonzero(steps != 7)
        if bad.size:
            missing = frame.index[bad[0]] + pd.Timedelta(days=7)
            raise DataGapError(f"{path}: weekly series is missing {missing.date()}", missing=missing.date())
        if (frame["ili_rate"] < 0).any():
            raise InvalidInputError(f"{path}: ILI rates must be nonnegative")
        return frame["ili_rate"]

    gap = first_gap(frame.index)
    if gap is not None:
        raise DataGapError(f"{path}: daily data is missing {gap.date()}", missing=gap.date())
    if columns in (["value"], ["ili_rate"]):
        return frame[columns[0]]
    return frame


def _format_float(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def to_csv_text(data: pd.Series | pd.DataFrame | ProbabilisticForecast) -> str:
    if isinstance(data, ProbabilisticForecast):
        frame = data.to_frame()
    elif isinstance(data, pd.Series):
        frame = data.to_frame(name=data.name if data.name == "ili_rate" else "value")
    else:
        frame = data
    if not isinstance(frame.index, pd.DatetimeIndex):
        raise InvalidInputError("only date-indexed data can be written")
    text = frame.astype(np.float64).map(_format_float)
    text.index = frame.index.strftime("%Y-%m-%d")
    text.index.name = "date"
    buffer = io.StringIO()
    text.to_csv(buffer, lineterminator="\n")
    return buffer.getvalue()


def save_csv(data: pd.Series | pd.DataFrame | ProbabilisticForecast, path: str | Path) -> Path:
    path = Path(path)
    atomic_write_text(path, to_csv_text(data))
    return path
