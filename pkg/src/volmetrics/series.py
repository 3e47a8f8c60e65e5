"""Date-indexed series containers, return transforms and calendar alignment."""

from __future__ import annotations

import csv
import datetime as dt
import os
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

__all__ = [
    "TimeSeries",
    "Panel",
    "load_series",
    "log_returns",
    "difference",
    "log_difference",
    "align",
]


def _as_dates(dates) -> np.ndarray:
    return np.asarray(dates, dtype="datetime64[D]")


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Real-valued observations on strictly increasing calendar dates.

    Parameters
    ----------
    dates : array-like of datetime64[D] (or anything numpy can coerce)
    values : array-like of float
    name : str, optional
    meta : dict, optional
        Ingestion metadata (source file, dropped rows, duplicate policy).
    """

    dates: np.ndarray
    values: np.ndarray
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        dates = _as_dates(self.dates).ravel()
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if dates.shape != values.shape:
            raise ValueError(
                f"dates and values differ in length ({dates.size} vs {values.size})"
            )
        if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
            raise ValueError("dates must be strictly increasing without duplicates")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        dates.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        if len(self) == 0:
            return f"TimeSeries(name={self.name!r}, empty)"
        return (
            f"TimeSeries(name={self.name!r}, n={len(self)}, "
            f"{self.dates[0]}..{self.dates[-1]})"
        )

    def with_values(self, values, dates=None, name: str | None = None) -> "TimeSeries":
        return TimeSeries(
            self.dates if dates is None else dates,
            values,
            self.name if name is None else name,
        )

    def between(self, start=None, end=None) -> "TimeSeries":
        """Restrict to ``start <= date <= end`` (either bound optional)."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return TimeSeries(self.dates[mask], self.values[mask], self.name, dict(self.meta))

    @property
    def weekdays(self) -> np.ndarray:
        """Day of week, Monday = 0."""
        # 1970-01-01 was a Thursday
        return (self.dates.astype(np.int64) + 3) % 7


@dataclass(frozen=True, eq=False)
class Panel:
    """Several named columns sharing one date index."""

    dates: np.ndarray
    columns: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        dates = _as_dates(self.dates).ravel()
        if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
            raise ValueError("dates must be strictly increasing without duplicates")
        cols = {}
        for name, col in self.columns.items():
            arr = np.asarray(col, dtype=np.float64).ravel()
            if arr.size != dates.size:
                raise ValueError(
                    f"column {name!r} has {arr.size} entries, expected {dates.size}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"column {name!r} contains non-finite values")
            arr.setflags(write=False)
            cols[str(name)] = arr
        if len(cols) != len(self.columns):
            raise ValueError("column names must be unique")
        dates.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "columns", cols)

    @classmethod
    def from_series(cls, series: Sequence[TimeSeries]) -> "Panel":
        names = [s.name or f"x{i}" for i, s in enumerate(series)]
        if len(set(names)) != len(names):
            raise ValueError(f"column names must be unique, got {names}")
        dates = series[0].dates
        for s in series[1:]:
            if not np.array_equal(s.dates, dates):
                raise ValueError("series are not on a common calendar; use align()")
        return cls(dates, {n: s.values for n, s in zip(names, series)})

    def __len__(self) -> int:
        return self.dates.size

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def values(self, names: Iterable[str] | None = None) -> np.ndarray:
        """Columns stacked into a ``(T, K)`` array."""
        names = self.names if names is None else list(names)
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise KeyError(f"unknown column(s): {missing}")
        return np.column_stack([self.columns[n] for n in names])

    def series(self, name: str) -> TimeSeries:
        return TimeSeries(self.dates, self.columns[name], name)

    def select(self, names: Sequence[str]) -> "Panel":
        return Panel(self.dates, {n: self.columns[n] for n in names})

    def between(self, start=None, end=None) -> "Panel":
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return Panel(self.dates[mask], {n: c[mask] for n, c in self.columns.items()})


def load_series(
    path: str | os.PathLike,
    date_column: str = "date",
    value_column: str = "value",
    date_format: str = "%Y-%m-%d",
    duplicates: Literal["error", "last"] = "error",
    name: str | None = None,
) -> TimeSeries:
    """Read one series from a headed UTF-8 CSV file.

    Rows whose date or value is blank or unparseable are dropped and counted in
    ``meta["dropped"]``. Duplicate dates either raise (``duplicates="error"``)
    or keep the row appearing last in the file (``duplicates="last"``).
    """
    if duplicates not in ("error", "last"):
        raise ValueError(f"unknown duplicate policy {duplicates!r}")
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"{path}: no such file")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (date_column, value_column):
            if col not in header:
                raise KeyError(f"{path}: column {col!r} not found (have {header})")
        parsed: dict[dt.date, float] = {}
        dropped = 0
        duplicated = 0
        for row in reader:
            raw_date = (row.get(date_column) or "").strip()
            raw_value = (row.get(value_column) or "").strip()
            try:
                day = dt.datetime.strptime(raw_date, date_format).date()
                value = float(raw_value)
            except ValueError:
                dropped += 1
                continue
            if not np.isfinite(value):
                dropped += 1
                continue
            if day in parsed:
                if duplicates == "error":
                    raise ValueError(f"{path}: duplicate date {day.isoformat()}")
                duplicated += 1
                # re-insert so the last occurrence wins
                del parsed[day]
            parsed[day] = value

    if not parsed:
        raise ValueError(f"{path}: no usable rows")
    days = sorted(parsed)
    meta = {
        "source": path,
        "dropped": dropped,
        "duplicates": duplicates,
        "duplicates_replaced": duplicated,
    }
    return TimeSeries(
        np.array(days, dtype="datetime64[D]"),
        np.array([parsed[d] for d in days]),
        name if name is not None else value_column,
        meta,
    )


def _require_length(series: TimeSeries, n: int) -> None:
    if len(series) < n:
        raise ValueError(f"series {series.name!r} needs at least {n} observations")


def log_returns(prices: TimeSeries) -> TimeSeries:
    """``ln(P_t / P_{t-1})`` dated at ``t``."""
    _require_length(prices, 2)
    if np.any(prices.values <= 0):
        raise ValueError("prices must be strictly positive")
    logp = np.log(prices.values)
    return TimeSeries(prices.dates[1:], np.diff(logp), prices.name)


def difference(series: TimeSeries) -> TimeSeries:
    """First differences dated at ``t``."""
    _require_length(series, 2)
    return TimeSeries(series.dates[1:], np.diff(series.values), series.name)


def log_difference(series: TimeSeries) -> TimeSeries:
    """``ln(x_t) - ln(x_{t-1})``; identical to :func:`log_returns`."""
    return log_returns(series)


def align(
    series_list: Sequence[TimeSeries],
    policy: Literal["inner", "ffill"] = "inner",
    max_gap: int = 3,
) -> Panel:
    """Put several series on one calendar.

    ``policy="inner"`` keeps dates present in every series. ``policy="ffill"``
    uses the union calendar and carries each series' last observation forward
    for at most ``max_gap`` calendar days; dates where any series would need a
    longer carry (or precede its first observation) are dropped.
    """
    if len(series_list) < 2:
        raise ValueError("align needs at least two series")
    names = [s.name or f"x{i}" for i, s in enumerate(series_list)]
    if len(set(names)) != len(names):
        raise ValueError(f"series names must be unique, got {names}")

    if policy == "inner":
        common = series_list[0].dates
        for s in series_list[1:]:
            common = np.intersect1d(common, s.dates, assume_unique=True)
        if common.size == 0:
            raise ValueError("series share no common dates")
        cols = {
            n: s.values[np.searchsorted(s.dates, common)]
            for n, s in zip(names, series_list)
        }
        return Panel(common, cols)

    if policy != "ffill":
        raise ValueError(f"unknown alignment policy {policy!r}")
    if max_gap < 0:
        raise ValueError("max_gap must be nonnegative")
    union = series_list[0].dates
    for s in series_list[1:]:
        union = np.union1d(union, s.dates)
    keep = np.ones(union.size, dtype=bool)
    filled = {}
    for n, s in zip(names, series_list):
        pos = np.searchsorted(s.dates, union, side="right") - 1
        valid = pos >= 0
        safe = np.where(valid, pos, 0)
        age = (union - s.dates[safe]).astype(np.int64)
        keep &= valid & (age <= max_gap)
        filled[n] = s.values[safe]
    if not keep.any():
        raise ValueError("no dates survive forward-fill alignment")
    return Panel(union[keep], {n: v[keep] for n, v in filled.items()})
