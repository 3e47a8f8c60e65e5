"""Ordinary least squares and the volatility regressions built on it.

Solves go through a QR factorisation of the design matrix; coefficient
covariances are either the classical ``s^2 (X'X)^{-1}`` or a Newey-West
(Bartlett kernel) HAC estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from .series import TimeSeries, align

__all__ = [
    "RankDeficiencyError",
    "OlsFit",
    "LeverageFit",
    "ols",
    "day_of_week_regression",
    "leverage_regression",
    "forecast_regression",
    "encompassing_regression",
]

RANK_TOL = 1e-10
WEEKDAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri")


class RankDeficiencyError(np.linalg.LinAlgError):
    """Raised when the design matrix does not have full column rank."""

    def __init__(self, message: str, columns: Sequence[str] = ()):
        super().__init__(message)
        self.columns = list(columns)


@dataclass(frozen=True, eq=False)
class OlsFit:
    names: list[str]
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r2: float
    adj_r2: float
    residuals: np.ndarray
    nobs: int
    cov: np.ndarray
    rss: float
    df_resid: int
    fitted: np.ndarray
    dates: np.ndarray | None = None
    cov_type: str = "classical"
    tests: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def index(self, name: str) -> int:
        return self.names.index(name)

    def residual_series(self) -> TimeSeries:
        if self.dates is None:
            raise ValueError("fit was estimated without dates")
        return TimeSeries(self.dates, self.residuals, "residuals")

    def lincom(self, weights) -> tuple[float, float]:
        """Estimate and standard error of ``weights @ coefficients``."""
        w = np.asarray(weights, dtype=float)
        return float(w @ self.coefficients), float(np.sqrt(w @ self.cov @ w))

    def wald(self, restriction, target) -> tuple[float, float]:
        """F-form Wald test of ``restriction @ beta = target``.

        Returns the statistic (chi-square divided by the number of
        restrictions) and its p-value from F(q, n - k).
        """
        rmat = np.atleast_2d(np.asarray(restriction, dtype=float))
        diff = rmat @ self.coefficients - np.asarray(target, dtype=float)
        middle = rmat @ self.cov @ rmat.T
        q = rmat.shape[0]
        stat = float(diff @ np.linalg.solve(middle, diff)) / q
        return stat, float(stats.f.sf(stat, q, self.df_resid))

    def summary_rows(self) -> list[dict]:
        return [
            {
                "term": n,
                "coef": float(c),
                "std_err": float(s),
                "t": float(t),
                "p": float(p),
            }
            for n, c, s, t, p in zip(
                self.names, self.coefficients, self.std_errors, self.t_stats, self.p_values
            )
        ]


def _hac_meat(x: np.ndarray, e: np.ndarray, lags: int) -> np.ndarray:
    scores = x * e[:, None]
    meat = scores.T @ scores
    for lag in range(1, lags + 1):
        w = 1.0 - lag / (lags + 1.0)
        gamma = scores[lag:].T @ scores[:-lag]
        meat += w * (gamma + gamma.T)
    return meat


def ols(
    y,
    X,
    names: Sequence[str] | None = None,
    intercept: bool = False,
    hac_lags: int | None = None,
    dates=None,
) -> OlsFit:
    """Least-squares fit of ``y`` on the columns of ``X``.

    Parameters
    ----------
    y : array-like, shape (n,)
    X : array-like, shape (n, k)
    names : column labels; defaults to ``x0, x1, ...``
    intercept : prepend a column of ones labelled ``const``
    hac_lags : if given, Newey-West standard errors with this many lags
        (``0`` gives White's heteroskedasticity-robust errors)
    dates : optional dates attached to the residuals

    Raises
    ------
    RankDeficiencyError
        If some column of ``X`` is (numerically) a combination of earlier
        ones: ``|R_jj| < 1e-10 * max |R_ii|`` in the QR factorisation.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    x = np.asarray(X, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = y.size
    if x.shape[0] != n:
        raise ValueError(f"X has {x.shape[0]} rows but y has {n}")
    names = [f"x{i}" for i in range(x.shape[1])] if names is None else list(names)
    if len(names) != x.shape[1]:
        raise ValueError("names must match the number of columns")
    if intercept:
        x = np.column_stack([np.ones(n), x])
        names = ["const", *names]
    k = x.shape[1]
    if n <= k:
        raise ValueError(f"need more observations than regressors (n={n}, k={k})")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in regression data")

    q, r = np.linalg.qr(x)
    diag = np.abs(np.diag(r))
    scale = diag.max() if diag.size else 0.0
    bad = np.flatnonzero(diag < RANK_TOL * scale) if scale > 0 else np.arange(k)
    if bad.size:
        cols = [names[i] for i in bad]
        raise RankDeficiencyError(f"design matrix is rank deficient; offending columns: {cols}", cols)

    beta = linalg.solve_triangular(r, q.T @ y)
    fitted = x @ beta
    resid = y - fitted
    rss = float(resid @ resid)
    df = n - k
    r_inv = linalg.solve_triangular(r, np.eye(k))
    xtx_inv = r_inv @ r_inv.T

    if hac_lags is None:
        cov = xtx_inv * (rss / df)
        cov_type = "classical"
    else:
        if hac_lags < 0:
            raise ValueError("hac_lags must be nonnegative")
        cov = xtx_inv @ _hac_meat(x, resid, int(hac_lags)) @ xtx_inv
        cov = 0.5 * (cov + cov.T)
        cov_type = f"hac({int(hac_lags)})"
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = beta / se
    pvals = 2.0 * stats.t.sf(np.abs(tvals), df)

    # centred R^2 whenever the column space contains a constant
    ones = np.ones(n)
    has_const = np.linalg.norm(ones - q @ (q.T @ ones)) < 1e-8 * np.sqrt(n)
    if has_const:
        tss = float(np.sum((y - y.mean()) ** 2))
        dof_total = n - 1
    else:
        tss = float(y @ y)
        dof_total = n
    if tss > 0:
        r2 = 1.0 - rss / tss
        adj = 1.0 - (1.0 - r2) * dof_total / df
    else:
        r2 = 1.0 if rss == 0 else float("nan")
        adj = r2
    return OlsFit(
        names=names,
        coefficients=beta,
        std_errors=se,
        t_stats=tvals,
        p_values=pvals,
        r2=float(r2),
        adj_r2=float(adj),
        residuals=resid,
        nobs=n,
        cov=cov,
        rss=rss,
        df_resid=df,
        fitted=fitted,
        dates=None if dates is None else np.asarray(dates, dtype="datetime64[D]"),
        cov_type=cov_type,
    )


def day_of_week_regression(delta_series: TimeSeries, hac_lags: int | None = None) -> OlsFit:
    """Regress a change series on five weekday dummies without intercept.

    Each coefficient equals the mean of the series over that weekday.
    """
    if len(delta_series) < 25:
        raise ValueError("day-of-week regression needs at least 25 observations")
    wd = delta_series.weekdays
    if np.any(wd > 4):
        raise ValueError("series contains weekend dates")
    missing = [WEEKDAY_NAMES[j] for j in range(5) if not np.any(wd == j)]
    if missing:
        raise ValueError(f"weekday(s) absent from sample: {missing}")
    dummies = (wd[:, None] == np.arange(5)[None, :]).astype(float)
    return ols(
        delta_series.values,
        dummies,
        names=list(WEEKDAY_NAMES),
        hac_lags=hac_lags,
        dates=delta_series.dates,
    )


@dataclass(frozen=True, eq=False)
class LeverageFit:
    base: OlsFit
    beta0_plus: float
    beta0_minus: float
    beta0_plus_se: float
    beta0_minus_se: float


LEVERAGE_TERMS = ["r_lag2", "r_lag1", "r", "abs_r", "r_lead1", "r_lead2", "dimp_lag1"]


def leverage_regression(
    d_log_imp: TimeSeries, returns: TimeSeries, hac_lags: int | None = None
) -> LeverageFit:
    """Volatility-change regression on two lags, two leads and the
    contemporaneous signed and absolute return, plus one own lag.

    The asymmetric response to positive returns is ``beta0 + beta0_av`` and to
    negative returns ``beta0 - beta0_av``.
    """
    d_log_imp = TimeSeries(d_log_imp.dates, d_log_imp.values, "dimp")
    returns = TimeSeries(returns.dates, returns.values, "r")
    panel = align([d_log_imp, returns], policy="inner")
    v = panel.columns["dimp"]
    r = panel.columns["r"]
    n = len(panel)
    # usable t: 2 .. n-3 (two lags, two leads)
    t = np.arange(2, n - 2)
    if t.size < 30:
        raise ValueError(f"need at least 30 usable observations, have {t.size}")
    design = np.column_stack(
        [r[t - 2], r[t - 1], r[t], np.abs(r[t]), r[t + 1], r[t + 2], v[t - 1]]
    )
    fit = ols(v[t], design, names=LEVERAGE_TERMS, intercept=True, hac_lags=hac_lags,
              dates=panel.dates[t])
    i0, iav = fit.index("r"), fit.index("abs_r")
    w_plus = np.zeros(len(fit.names))
    w_plus[i0], w_plus[iav] = 1.0, 1.0
    w_minus = np.zeros(len(fit.names))
    w_minus[i0], w_minus[iav] = 1.0, -1.0
    b0, bav = fit.coefficients[i0], fit.coefficients[iav]
    return LeverageFit(
        base=fit,
        beta0_plus=b0 + bav,
        beta0_minus=b0 - bav,
        beta0_plus_se=fit.lincom(w_plus)[1],
        beta0_minus_se=fit.lincom(w_minus)[1],
    )


def _aligned(series: Sequence[TimeSeries], labels: Sequence[str]):
    renamed = [TimeSeries(s.dates, s.values, lab) for s, lab in zip(series, labels)]
    return align(renamed, policy="inner")


def forecast_regression(
    rv: TimeSeries, forecaster: TimeSeries, hac_lags: int | None = None
) -> OlsFit:
    """Regress realised volatility on one forecast.

    ``fit.tests["unbiased"]`` holds the Wald F-test of ``(const, slope) = (0, 1)``.
    """
    panel = _aligned([rv, forecaster], ["rv", "forecast"])
    if len(panel) < 10:
        raise ValueError("forecast regression needs at least 10 aligned observations")
    f = panel.columns["forecast"]
    if np.ptp(f) == 0:
        raise ValueError("forecaster is constant on the sample")
    fit = ols(panel.columns["rv"], f, names=["forecast"], intercept=True,
              hac_lags=hac_lags, dates=panel.dates)
    fit.tests["unbiased"] = fit.wald(np.eye(2), [0.0, 1.0])
    return fit


def encompassing_regression(
    rv: TimeSeries, f1: TimeSeries, f2: TimeSeries, hac_lags: int | None = None
) -> OlsFit:
    """Regress realised volatility on two competing forecasts plus intercept."""
    panel = _aligned([rv, f1, f2], ["rv", "f1", "f2"])
    if len(panel) < 10:
        raise ValueError("encompassing regression needs at least 10 aligned observations")
    a, b = panel.columns["f1"], panel.columns["f2"]
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise ValueError("a forecaster is constant on the sample")
    corr = np.corrcoef(a, b)[0, 1]
    if abs(corr) > 0.9999:
        raise RankDeficiencyError(
            f"forecasts are collinear (correlation {corr:.6f})", ["f1", "f2"]
        )
    return ols(panel.columns["rv"], np.column_stack([a, b]), names=["f1", "f2"],
               intercept=True, hac_lags=hac_lags, dates=panel.dates)
