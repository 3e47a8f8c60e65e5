"""Augmented Dickey-Fuller and KPSS tests.

Critical values
---------------
ADF: MacKinnon (2010) response surfaces for a single series,
``cv(T) = b0 + b1/T + b2/T**2 + b3/T**3`` with ``T`` the regression sample
size. KPSS: the asymptotic quantiles of Kwiatkowski et al. (1992, Table 1).
Both tables are checked against fresh null simulations in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .regression import ols
from .series import TimeSeries
from .simulate import normal_stream

__all__ = [
    "UnitRootResult",
    "adf_test",
    "kpss_test",
    "adf_critical_values",
    "KPSS_CRITICAL_VALUES",
    "simulate_df_null",
    "simulate_kpss_null",
]

LEVELS = ("1%", "5%", "10%")

TrendSpec = Literal["none", "constant", "constant+trend"]
_TREND_ALIASES = {
    "none": "none", "n": "none", "nc": "none",
    "constant": "constant", "c": "constant",
    "constant+trend": "constant+trend", "ct": "constant+trend",
}

# rows: 1%, 5%, 10%; columns: b0, b1, b2, b3
_ADF_SURFACE = {
    "none": np.array([
        [-2.56574, -2.2358, -3.627, 0.0],
        [-1.94100, -0.2686, -3.365, 31.223],
        [-1.61682, 0.2656, -2.714, 25.364],
    ]),
    "constant": np.array([
        [-3.43035, -6.5393, -16.786, -79.433],
        [-2.86154, -2.8903, -4.234, -40.040],
        [-2.56677, -1.5384, -2.809, 0.0],
    ]),
    "constant+trend": np.array([
        [-3.95877, -9.0531, -28.428, -134.155],
        [-3.41049, -4.3904, -9.036, -45.374],
        [-3.12705, -2.5856, -3.925, -22.380],
    ]),
}

KPSS_CRITICAL_VALUES = {
    "constant": {"1%": 0.739, "5%": 0.463, "10%": 0.347},
    "constant+trend": {"1%": 0.216, "5%": 0.146, "10%": 0.119},
}


def _trend(spec: str) -> str:
    try:
        return _TREND_ALIASES[spec]
    except KeyError:
        raise ValueError(f"unknown trend specification {spec!r}") from None


@dataclass(frozen=True)
class UnitRootResult:
    test: str
    statistic: float
    lags_used: int
    trend_spec: str
    critical_values: dict
    reject_at: dict
    nobs: int
    selection: str = "fixed"
    extra: dict = field(default_factory=dict)

    @property
    def null(self) -> str:
        return "unit root" if self.test == "ADF" else "stationarity"


def adf_critical_values(trend_spec: str = "constant", nobs: int | None = None) -> dict:
    """ADF critical values at sample size ``nobs`` (asymptotic if ``None``)."""
    table = _ADF_SURFACE[_trend(trend_spec)]
    if nobs is None:
        vals = table[:, 0]
    else:
        inv = 1.0 / nobs
        vals = table @ np.array([1.0, inv, inv**2, inv**3])
    return dict(zip(LEVELS, map(float, vals)))


def _deterministic(n: int, trend: str, start: int) -> tuple[np.ndarray, list[str]]:
    if trend == "none":
        return np.empty((n, 0)), []
    cols = [np.ones(n)]
    names = ["const"]
    if trend == "constant+trend":
        cols.append(np.arange(start, start + n, dtype=float))
        names.append("trend")
    return np.column_stack(cols), names


def _adf_design(y: np.ndarray, p: int, first: int, trend: str):
    """Regression of dy[j] for j >= first (first >= p)."""
    dy = np.diff(y)
    rows = np.arange(first, dy.size)
    lagged = [y[rows]]  # y_{t-1} for dy[j] = y[j+1] - y[j]
    lagged += [dy[rows - i] for i in range(1, p + 1)]
    det, det_names = _deterministic(rows.size, trend, first + 1)
    x = np.column_stack([det, *lagged]) if det.size else np.column_stack(lagged)
    names = det_names + ["y_lag1"] + [f"dy_lag{i}" for i in range(1, p + 1)]
    return dy[rows], x, names


def adf_test(
    series,
    max_lags: int = 8,
    selection: Literal["fixed", "schwarz"] = "schwarz",
    trend_spec: TrendSpec = "constant",
) -> UnitRootResult:
    """ADF regression ``dy_t = det + rho*y_{t-1} + sum_i gamma_i dy_{t-i}``.

    With ``selection="schwarz"`` the lag order is chosen by minimising
    ``ln(RSS/n) + k ln(n)/n`` over ``0..max_lags`` on a common sample, and the
    chosen model is then re-estimated on all observations it can use. With
    ``selection="fixed"``, ``max_lags`` lags are used. Rejection means the
    statistic is below the critical value.
    """
    trend = _trend(trend_spec)
    y = series.values if isinstance(series, TimeSeries) else np.asarray(series, float)
    if max_lags < 0:
        raise ValueError("max_lags must be nonnegative")
    if y.size <= max_lags + 10:
        raise ValueError(f"need more than max_lags + 10 = {max_lags + 10} observations")

    if selection == "schwarz":
        best = None
        for p in range(max_lags + 1):
            dep, x, _ = _adf_design(y, p, max_lags, trend)
            fit = ols(dep, x)
            nobs = dep.size
            bic = np.log(fit.rss / nobs) + x.shape[1] * np.log(nobs) / nobs
            if best is None or bic < best[0]:
                best = (bic, p)
        lags = best[1]
    elif selection == "fixed":
        lags = max_lags
    else:
        raise ValueError(f"unknown lag selection {selection!r}")

    dep, x, names = _adf_design(y, lags, lags, trend)
    fit = ols(dep, x, names=names)
    stat = float(fit.t_stats[names.index("y_lag1")])
    cvs = adf_critical_values(trend, dep.size)
    return UnitRootResult(
        test="ADF",
        statistic=stat,
        lags_used=lags,
        trend_spec=trend,
        critical_values=cvs,
        reject_at={k: stat < v for k, v in cvs.items()},
        nobs=dep.size,
        selection=selection,
    )


def _long_run_variance(e: np.ndarray, bandwidth: int) -> float:
    n = e.size
    s2 = float(e @ e) / n
    for lag in range(1, bandwidth + 1):
        s2 += 2.0 * (1.0 - lag / (bandwidth + 1.0)) * float(e[lag:] @ e[:-lag]) / n
    return s2


def kpss_test(
    series,
    bandwidth: int | Literal["auto"] = "auto",
    trend_spec: Literal["constant", "constant+trend"] = "constant",
) -> UnitRootResult:
    """KPSS statistic ``T^-2 sum S_t^2 / s^2(l)`` with a Bartlett long-run variance.

    The automatic bandwidth is ``floor(4 (T/100)^(1/4))``. Rejection (of
    stationarity) means the statistic exceeds the critical value.
    """
    trend = _trend(trend_spec)
    if trend == "none":
        raise ValueError("KPSS needs a constant or constant+trend specification")
    y = series.values if isinstance(series, TimeSeries) else np.asarray(series, float)
    n = y.size
    if n <= 20:
        raise ValueError("KPSS needs more than 20 observations")
    if bandwidth == "auto":
        bw = int(np.floor(4.0 * (n / 100.0) ** 0.25))
    else:
        bw = int(bandwidth)
        if bw < 0 or bw >= n:
            raise ValueError("bandwidth must be in [0, n)")
    if trend == "constant":
        e = y - y.mean()
    else:
        det, _ = _deterministic(n, trend, 1)
        coef, *_ = np.linalg.lstsq(det, y, rcond=None)
        e = y - det @ coef
    lrv = _long_run_variance(e, bw)
    if lrv <= 0 or not np.any(e):
        raise ValueError("series is constant (zero long-run variance)")
    s = np.cumsum(e)
    stat = float(s @ s) / (n * n * lrv)
    cvs = dict(KPSS_CRITICAL_VALUES[trend])
    return UnitRootResult(
        test="KPSS",
        statistic=stat,
        lags_used=bw,
        trend_spec=trend,
        critical_values=cvs,
        reject_at={k: stat > v for k, v in cvs.items()},
        nobs=n,
        extra={"bandwidth": bw},
    )


def _partial_out(mat: np.ndarray, det: np.ndarray) -> np.ndarray:
    if det.shape[1] == 0:
        return mat
    q, _ = np.linalg.qr(det)
    return mat - (mat @ q) @ q.T


def simulate_df_null(
    reps: int, nobs: int, trend_spec: str = "constant", seed: int = 0, chunk: int = 2000
) -> np.ndarray:
    """Dickey-Fuller t-statistics (no augmentation) under a driftless random walk.

    ``nobs`` is the regression sample size; each replication uses its own
    seed ``seed + replication`` so results do not depend on chunking.
    """
    trend = _trend(trend_spec)
    det, _ = _deterministic(nobs, trend, 1)
    k = det.shape[1] + 1
    out = np.empty(reps)
    for lo in range(0, reps, chunk):
        hi = min(reps, lo + chunk)
        z = np.vstack([normal_stream(seed + r, nobs + 1) for r in range(lo, hi)])
        y = np.cumsum(z, axis=1)
        ylag = _partial_out(y[:, :-1], det)
        dy = _partial_out(np.diff(y, axis=1), det)
        sxx = np.einsum("ij,ij->i", ylag, ylag)
        rho = np.einsum("ij,ij->i", ylag, dy) / sxx
        resid = dy - rho[:, None] * ylag
        s2 = np.einsum("ij,ij->i", resid, resid) / (nobs - k)
        out[lo:hi] = rho / np.sqrt(s2 / sxx)
    return out


def simulate_kpss_null(
    reps: int, nobs: int, trend_spec: str = "constant", seed: int = 0, chunk: int = 2000
) -> np.ndarray:
    """KPSS statistics (bandwidth 0) for IID Gaussian samples of size ``nobs``."""
    trend = _trend(trend_spec)
    det, _ = _deterministic(nobs, trend, 1)
    out = np.empty(reps)
    for lo in range(0, reps, chunk):
        hi = min(reps, lo + chunk)
        z = np.vstack([normal_stream(seed + r, nobs) for r in range(lo, hi)])
        e = _partial_out(z, det)
        s = np.cumsum(e, axis=1)
        lrv = np.einsum("ij,ij->i", e, e) / nobs
        out[lo:hi] = np.einsum("ij,ij->i", s, s) / (nobs * nobs * lrv)
    return out
