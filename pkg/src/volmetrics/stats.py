"""Descriptive statistics, autocorrelation and portmanteau tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .series import TimeSeries

__all__ = [
    "SummaryStats",
    "chi2_sf",
    "describe",
    "autocorrelation",
    "ljung_box",
    "cross_correlation",
    "moment_zscores",
]


def _values(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.values
    return np.asarray(x, dtype=np.float64).ravel()


def _check_variation(dev: np.ndarray) -> float:
    ss = float(dev @ dev)
    if ss <= 0.0:
        raise ValueError("series is constant; moments and autocorrelations undefined")
    return ss


def chi2_sf(stat: float, df: float) -> float:
    """Upper tail of the chi-square distribution, ``Q(df/2, stat/2)``."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if stat <= 0:
        return 1.0
    return float(gammaincc(0.5 * df, 0.5 * stat))


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    stdev: float
    min: float
    max: float
    skewness: float
    kurtosis: float
    acf1: float
    acf2: float
    ljung_box_q: float
    ljung_box_p: float
    lb_lags: int
    excess_kurtosis: bool = False

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "stdev": self.stdev,
            "min": self.min,
            "max": self.max,
            "skewness": self.skewness,
            "kurtosis": self.kurtosis,
            "acf1": self.acf1,
            "acf2": self.acf2,
            "lb_q": self.ljung_box_q,
            "lb_p": self.ljung_box_p,
        }


def _acf(x: np.ndarray, nlags: int) -> np.ndarray:
    dev = x - x.mean()
    denom = _check_variation(dev)
    out = np.empty(nlags + 1)
    out[0] = 1.0
    n = dev.size
    for k in range(1, nlags + 1):
        out[k] = (dev[: n - k] @ dev[k:]) / denom
    return out


def autocorrelation(series, lag: int) -> float:
    """Sample autocorrelation at ``lag`` using the divide-by-T covariance."""
    x = _values(series)
    if lag < 0 or x.size <= lag:
        raise ValueError(f"need 0 <= lag < n (lag={lag}, n={x.size})")
    return float(_acf(x, lag)[lag])


def ljung_box(series, m: int = 10) -> tuple[float, float]:
    """Ljung-Box ``Q = T(T+2) sum_k rho_k^2 / (T-k)`` and its chi-square(m) p-value."""
    x = _values(series)
    t = x.size
    if m < 1 or t <= m:
        raise ValueError(f"need 1 <= m < n (m={m}, n={t})")
    rho = _acf(x, m)[1:]
    q = float(t * (t + 2) * np.sum(rho**2 / (t - np.arange(1, m + 1))))
    return q, chi2_sf(q, m)


def describe(series, lb_lags: int = 10, excess_kurtosis: bool = False) -> SummaryStats:
    """Moments, first two autocorrelations and a Ljung-Box statistic.

    Skewness is ``m3 / m2**1.5`` and kurtosis ``m4 / m2**2`` from central sample
    moments (normal = 3; pass ``excess_kurtosis=True`` to subtract 3). The
    standard deviation uses the ``n - 1`` divisor.
    """
    x = _values(series)
    n = x.size
    if n < lb_lags + 2:
        raise ValueError(f"need at least lb_lags + 2 = {lb_lags + 2} observations")
    dev = x - x.mean()
    _check_variation(dev)
    m2 = np.mean(dev**2)
    skew = np.mean(dev**3) / m2**1.5
    kurt = np.mean(dev**4) / m2**2
    if excess_kurtosis:
        kurt -= 3.0
    acf = _acf(x, 2)
    q, p = ljung_box(x, lb_lags)
    return SummaryStats(
        n=n,
        mean=float(x.mean()),
        stdev=float(x.std(ddof=1)),
        min=float(x.min()),
        max=float(x.max()),
        skewness=float(skew),
        kurtosis=float(kurt),
        acf1=float(acf[1]),
        acf2=float(acf[2]),
        ljung_box_q=q,
        ljung_box_p=p,
        lb_lags=lb_lags,
        excess_kurtosis=excess_kurtosis,
    )


def cross_correlation(a, b, lag: int = 0) -> float:
    """Pearson correlation of ``a_t`` with ``b_{t+lag}`` over the overlapping window."""
    if isinstance(a, TimeSeries) and isinstance(b, TimeSeries):
        if not np.array_equal(a.dates, b.dates):
            raise ValueError("series must share the same dates; use align()")
    x, y = _values(a), _values(b)
    if x.size != y.size:
        raise ValueError("series must have equal length")
    n = x.size
    if n - abs(lag) <= 2:
        raise ValueError("overlap too short for the requested lag")
    if lag >= 0:
        xs, ys = x[: n - lag], y[lag:]
    else:
        xs, ys = x[-lag:], y[: n + lag]
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx = _check_variation(dx)
    sy = _check_variation(dy)
    return float((dx @ dy) / np.sqrt(sx * sy))


def moment_zscores(skewness: float, kurtosis: float, n: int) -> tuple[float, float]:
    """Standardise sample skewness and raw kurtosis by their normal-theory errors.

    Under normality skewness is approximately N(0, 6/n) and kurtosis
    N(3, 24/n).
    """
    if n <= 0:
        raise ValueError("n must be positive")
    return skewness / np.sqrt(6.0 / n), (kurtosis - 3.0) / np.sqrt(24.0 / n)
