"""Run configuration: an INI file plus command-line overrides.

Example::

    [series]
    savi = data/savi.csv
    ftse = data/ftse.csv
    vix = data/us.csv#VIX          ; '#column' picks the value column

    [input]
    date_column = date
    value_column = value
    date_format = %Y-%m-%d
    duplicates = error

    [roles]
    index = savi
    price = ftse
    var = savi, vix, vxn

    [periods]
    full = 2007-04-02:2012-12-06
    sub1 = 2007-04-02:2009-04-23
    sub2 = 2009-05-04:2012-12-06

    [params]
    horizons = 5, 10, 22
    lambda = 0.94
    var_lag = 8
"""

from __future__ import annotations

import configparser
import datetime as dt
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

__all__ = ["ConfigError", "SeriesSource", "RunConfig", "load_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesSource:
    name: str
    path: Path
    value_column: str
    date_column: str = "date"
    date_format: str = "%Y-%m-%d"
    duplicates: str = "error"


def _parse_date(raw: str) -> dt.date:
    try:
        return dt.date.fromisoformat(raw.strip())
    except ValueError:
        raise ConfigError(f"bad date {raw!r} (expected YYYY-MM-DD)") from None


def _parse_range(raw: str) -> tuple[dt.date | None, dt.date | None]:
    if ":" not in raw:
        raise ConfigError(f"period {raw!r} must look like START:END")
    lo, hi = raw.split(":", 1)
    return (_parse_date(lo) if lo.strip() else None, _parse_date(hi) if hi.strip() else None)


def _split_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


@dataclass(frozen=True)
class RunConfig:
    series: dict[str, SeriesSource] = field(default_factory=dict)
    index: str | None = None
    price: str | None = None
    var_series: tuple[str, ...] = ()
    periods: dict[str, tuple[dt.date | None, dt.date | None]] = field(default_factory=dict)
    start: dt.date | None = None
    end: dt.date | None = None
    horizons: tuple[int, ...] = (5, 10, 22)
    lam: float = 0.94
    var_lag: int = 8
    var_max_lag: int = 8
    lb_lags: int = 10
    adf_max_lags: int = 8
    adf_trend: str = "constant"
    implied_base: float = 252.0
    garch_model: str = "gjr"
    garch_mode: str = "insample"
    granger_mode: str = "system"
    align_policy: str = "inner"
    max_gap: int = 3
    output_format: str = "text"
    seed: int = 0
    jobs: int = 1

    def __post_init__(self) -> None:
        if any(h <= 0 for h in self.horizons):
            raise ConfigError("horizons must be positive")
        if not 0 < self.lam < 1:
            raise ConfigError("lambda must lie in (0, 1)")
        if self.var_lag < 1 or self.var_max_lag < 1:
            raise ConfigError("VAR lag orders must be positive")
        if self.output_format not in ("text", "csv"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        self._check_periods()

    def _check_periods(self) -> None:
        full = self.periods.get("full")
        subs = sorted(
            ((n, r) for n, r in self.periods.items() if n != "full"),
            key=lambda item: item[1][0] or dt.date.min,
        )
        for name, (lo, hi) in self.periods.items():
            if lo and hi and lo > hi:
                raise ConfigError(f"period {name!r} ends before it starts")
        if full is not None:
            for name, (lo, hi) in subs:
                if (full[0] and lo and lo < full[0]) or (full[1] and hi and hi > full[1]):
                    raise ConfigError(f"sub-period {name!r} lies outside the full range")
        for (n1, (_, hi1)), (n2, (lo2, _)) in zip(subs, subs[1:]):
            if hi1 is None or lo2 is None or lo2 <= hi1:
                raise ConfigError(f"sub-periods {n1!r} and {n2!r} overlap")

    def with_period(self, name: str) -> "RunConfig":
        if name not in self.periods:
            raise ConfigError(f"unknown period {name!r}; have {sorted(self.periods)}")
        lo, hi = self.periods[name]
        return replace(self, start=lo, end=hi)

    def source(self, name: str) -> SeriesSource:
        try:
            return self.series[name]
        except KeyError:
            raise ConfigError(f"series {name!r} not configured; have {sorted(self.series)}") from None


def load_config(path: str | os.PathLike | None) -> RunConfig:
    """Parse an INI run configuration (``None`` gives the defaults)."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",), interpolation=None)
    parser.optionxform = str  # keep series names case-sensitive
    parser.read(path, encoding="utf-8")
    base = path.parent

    inp = parser["input"] if parser.has_section("input") else {}
    date_column = inp.get("date_column", "date")
    value_column = inp.get("value_column", "value")
    date_format = inp.get("date_format", "%Y-%m-%d")
    duplicates = inp.get("duplicates", "error")

    series = {}
    if parser.has_section("series"):
        for name, raw in parser["series"].items():
            file_part, _, column = raw.strip().partition("#")
            p = Path(file_part.strip())
            if not p.is_absolute():
                p = base / p
            series[name] = SeriesSource(
                name, p, column.strip() or value_column, date_column, date_format, duplicates
            )

    roles = parser["roles"] if parser.has_section("roles") else {}
    periods = {}
    if parser.has_section("periods"):
        periods = {n: _parse_range(v) for n, v in parser["periods"].items()}

    kwargs = {}
    if parser.has_section("params"):
        prm = parser["params"]
        conv = {
            "horizons": ("horizons", lambda v: tuple(int(x) for x in _split_list(v))),
            "lambda": ("lam", float),
            "var_lag": ("var_lag", int),
            "var_max_lag": ("var_max_lag", int),
            "lb_lags": ("lb_lags", int),
            "adf_max_lags": ("adf_max_lags", int),
            "adf_trend": ("adf_trend", str),
            "implied_base": ("implied_base", float),
            "garch_model": ("garch_model", str),
            "garch_mode": ("garch_mode", str),
            "granger_mode": ("granger_mode", str),
            "align": ("align_policy", str),
            "max_gap": ("max_gap", int),
            "format": ("output_format", str),
            "seed": ("seed", int),
            "jobs": ("jobs", int),
        }
        for key, raw in prm.items():
            if key not in conv:
                raise ConfigError(f"unknown parameter {key!r} in [params]")
            attr, fn = conv[key]
            try:
                kwargs[attr] = fn(raw.strip())
            except ValueError:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from None

    var_series = tuple(_split_list(roles.get("var", "")))
    for role in [roles.get("index"), roles.get("price"), *var_series]:
        if role and role not in series:
            raise ConfigError(f"role refers to unknown series {role!r}")
    return RunConfig(
        series=series,
        index=roles.get("index"),
        price=roles.get("price"),
        var_series=var_series,
        periods=periods,
        **kwargs,
    )
