"""Volatility forecasters: realised, RiskMetrics, (GJR-)GARCH and implied.

All h-day forecasts are volatilities in return units (e.g. 0.02 = 2% over
the h days), so they can be regressed directly on realised volatility.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import expit, logit

from .series import TimeSeries
from .simulate import weekday_calendar

__all__ = [
    "GarchSpec",
    "GarchFit",
    "VolForecast",
    "realized_vol",
    "riskmetrics",
    "riskmetrics_horizon",
    "garch_loglik",
    "garch_score",
    "garch_fit",
    "garch_filter",
    "garch_forecast",
    "garch_rolling_forecast",
    "implied_horizon",
]

logger = logging.getLogger(__name__)

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class VolForecast:
    horizon_days: int
    values: TimeSeries
    source: str

    def __post_init__(self) -> None:
        if np.any(self.values.values < 0):
            raise ValueError("volatility forecasts must be nonnegative")


def realized_vol(
    returns: TimeSeries, h: int, sampling: Literal["overlapping", "non_overlapping"] = "overlapping"
) -> VolForecast:
    """Forward-looking realised volatility ``sqrt(sum_{j=1..h} r_{t+j}^2)`` stamped at ``t``.

    ``non_overlapping`` keeps every h-th stamp starting from the first
    feasible one, so consecutive windows share no returns.
    """
    h = int(h)
    n = len(returns)
    if h < 1:
        raise ValueError("horizon must be positive")
    if h >= n:
        raise ValueError(f"horizon {h} needs at least {h + 1} returns, have {n}")
    sq = returns.values[1:] ** 2
    sums = np.lib.stride_tricks.sliding_window_view(sq, h).sum(axis=1)
    dates = returns.dates[: sums.size]
    if sampling == "non_overlapping":
        sums, dates = sums[::h], dates[::h]
    elif sampling != "overlapping":
        raise ValueError(f"unknown sampling {sampling!r}")
    return VolForecast(h, TimeSeries(dates, np.sqrt(sums), f"rv{h}"), "realized")


def riskmetrics(
    returns: TimeSeries, lam: float = 0.94, init: Literal["sample"] | float = "sample"
) -> TimeSeries:
    """Exponentially weighted daily variance ``rm_t = (1-lam) r_{t-1}^2 + lam rm_{t-1}``.

    ``rm_0`` is the sample variance of the returns or a fixed value. The
    output has the same dates as ``returns`` and is a variance.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie strictly between 0 and 1")
    r = returns.values
    if isinstance(init, str):
        if init != "sample":
            raise ValueError(f"unknown initialisation {init!r}")
        if r.size < 2:
            raise ValueError("sample initialisation needs at least two returns")
        rm0 = float(np.var(r, ddof=1))
    else:
        rm0 = float(init)
        if rm0 < 0:
            raise ValueError("initial variance must be nonnegative")
    rm = np.empty(r.size)
    rm[0] = rm0
    if r.size > 1:
        rm[1:], _ = lfilter([1.0 - lam], [1.0, -lam], r[:-1] ** 2, zi=[lam * rm0])
    return TimeSeries(returns.dates, rm, "riskmetrics")


def riskmetrics_horizon(rm: TimeSeries, h: int) -> VolForecast:
    """Square-root-of-time scaling of a daily variance, ``sqrt(h * rm_t)``."""
    if h <= 0:
        raise ValueError("horizon must be positive")
    if np.any(rm.values < 0):
        raise ValueError("variance must be nonnegative")
    return VolForecast(int(h), rm.with_values(np.sqrt(h * rm.values), name=f"rm{h}"), "riskmetrics")


def implied_horizon(index_level: TimeSeries, h: int, calendar_base: float = 252) -> VolForecast:
    """Rescale an annualised percent volatility index to an h-day volatility.

    ``IMP_h = (VOL / 100) * sqrt(h / calendar_base)``.
    """
    if h <= 0:
        raise ValueError("horizon must be positive")
    if np.any(index_level.values < 0):
        raise ValueError("index levels must be nonnegative")
    vals = index_level.values / 100.0 * np.sqrt(h / float(calendar_base))
    return VolForecast(int(h), index_level.with_values(vals, name=f"imp{h}"), "implied")


# --------------------------------------------------------------------------
# GARCH


@dataclass(frozen=True)
class GarchSpec:
    model: Literal["symmetric", "gjr"] = "gjr"
    mean: Literal["zero", "constant"] = "zero"
    init_variance: Literal["sample"] | float = "sample"

    def __post_init__(self) -> None:
        if self.model not in ("symmetric", "gjr"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.mean not in ("zero", "constant"):
            raise ValueError(f"unknown mean specification {self.mean!r}")
        if not isinstance(self.init_variance, str) and not self.init_variance > 0:
            raise ValueError("fixed initial variance must be positive")
        if isinstance(self.init_variance, str) and self.init_variance != "sample":
            raise ValueError(f"unknown initial variance {self.init_variance!r}")


@dataclass(frozen=True, eq=False)
class GarchFit:
    spec: GarchSpec
    omega: float
    alpha: float
    beta: float
    phi: float
    loglik: float
    conditional_variance: TimeSeries
    residuals: TimeSeries
    next_variance: float
    converged: bool
    iterations: int
    grad_norm: float
    mu: float = 0.0
    boundary: bool = False
    starts: list = field(default_factory=list)

    @property
    def persistence(self) -> float:
        return self.alpha + 0.5 * self.phi + self.beta

    @property
    def stationarity_margin(self) -> float:
        return 1.0 - self.persistence

    @property
    def unconditional_variance(self) -> float:
        return self.omega / self.stationarity_margin

    @property
    def params(self) -> np.ndarray:
        return np.array([self.omega, self.alpha, self.phi, self.beta])


def _innovations(returns, spec: GarchSpec) -> tuple[np.ndarray, float]:
    r = returns.values if isinstance(returns, TimeSeries) else np.asarray(returns, float)
    mu = float(r.mean()) if spec.mean == "constant" else 0.0
    return r - mu, mu


def _initial_variance(eps: np.ndarray, spec: GarchSpec) -> float:
    if isinstance(spec.init_variance, str):
        return float(np.mean(eps**2))
    return float(spec.init_variance)


def _variance_path(theta: np.ndarray, eps: np.ndarray, s2_init: float) -> np.ndarray:
    omega, alpha, phi, beta = theta
    e2 = eps**2
    drive = omega + (alpha + phi * (eps[:-1] < 0)) * e2[:-1]
    s2 = np.empty(eps.size)
    s2[0] = s2_init
    s2[1:], _ = lfilter([1.0], [1.0, -beta], drive, zi=[beta * s2_init])
    return s2


def _loglik_and_grad(theta: np.ndarray, eps: np.ndarray, s2_init: float):
    """Gaussian log-likelihood and its gradient w.r.t. (omega, alpha, phi, beta)."""
    omega, alpha, phi, beta = theta
    s2 = _variance_path(theta, eps, s2_init)
    if np.any(s2 <= 0):
        return -np.inf, np.zeros(4)
    e2 = eps**2
    ll = -0.5 * float(np.sum(_LOG_2PI + np.log(s2) + e2 / s2))
    dl_ds2 = -0.5 * (s2 - e2) / s2**2
    neg = (eps[:-1] < 0).astype(float)
    drivers = np.vstack([
        np.ones(eps.size - 1),
        e2[:-1],
        neg * e2[:-1],
        s2[:-1],
    ])
    # d s2_t / d theta obeys d_t = x_t + beta * d_{t-1}, d_1 = 0
    ds2 = lfilter([1.0], [1.0, -beta], drivers, axis=1)
    grad = ds2 @ dl_ds2[1:]
    return ll, grad


def garch_loglik(params, returns, spec: GarchSpec = GarchSpec()) -> float:
    """Log-likelihood at ``params = (omega, alpha, phi, beta)``."""
    eps, _ = _innovations(returns, spec)
    theta = np.asarray(params, dtype=float)
    return _loglik_and_grad(theta, eps, _initial_variance(eps, spec))[0]


def garch_score(params, returns, spec: GarchSpec = GarchSpec()) -> np.ndarray:
    """Analytic gradient of :func:`garch_loglik`."""
    eps, _ = _innovations(returns, spec)
    theta = np.asarray(params, dtype=float)
    return _loglik_and_grad(theta, eps, _initial_variance(eps, spec))[1]


# Unconstrained coordinates: omega = exp(u0); persistence = expit(u1) in (0, 1);
# remaining coordinates split the persistence among alpha, phi/2, beta.


def _to_theta(u: np.ndarray, gjr: bool) -> tuple[np.ndarray, np.ndarray]:
    """Map to (omega, alpha, phi, beta) and return the Jacobian d theta / d u."""
    omega = np.exp(u[0])
    pi = expit(u[1])
    dpi = pi * (1.0 - pi)
    if not gjr:
        s = expit(u[2])
        ds = s * (1.0 - s)
        theta = np.array([omega, pi * s, 0.0, pi * (1.0 - s)])
        jac = np.zeros((4, 3))
        jac[0, 0] = omega
        jac[1, 1], jac[3, 1] = dpi * s, dpi * (1.0 - s)
        jac[1, 2], jac[3, 2] = pi * ds, -pi * ds
        return theta, jac
    z = np.array([0.0, u[2], u[3]])
    w = np.exp(z - z.max())
    w /= w.sum()
    v = pi * w  # alpha, phi/2, beta
    theta = np.array([omega, v[0], 2.0 * v[1], v[2]])
    dv = np.zeros((3, 4))
    dv[:, 1] = dpi * w
    for j, col in ((1, 2), (2, 3)):
        dv[:, col] = pi * w * ((np.arange(3) == j) - w[j])
    jac = np.zeros((4, 4))
    jac[0, 0] = omega
    jac[1] = dv[0]
    jac[2] = 2.0 * dv[1]
    jac[3] = dv[2]
    return theta, jac


def _from_theta(theta, gjr: bool) -> np.ndarray:
    omega, alpha, phi, beta = theta
    pi = alpha + 0.5 * phi + beta
    if not gjr:
        return np.array([np.log(omega), logit(pi), logit(alpha / pi)])
    w = np.array([alpha, 0.5 * phi, beta]) / pi
    return np.array([np.log(omega), logit(pi), np.log(w[1] / w[0]), np.log(w[2] / w[0])])


_STARTS = (
    (0.05, 0.05, 0.90),
    (0.10, 0.10, 0.80),
    (0.03, 0.03, 0.95),
)


def garch_fit(
    returns: TimeSeries,
    spec: GarchSpec = GarchSpec(),
    max_iter: int = 500,
    gtol: float = 1e-6,
    boundary_tol: float = 1e-4,
) -> GarchFit:
    """Gaussian maximum-likelihood fit of a GARCH(1,1) or GJR-GARCH(1,1).

    The likelihood is maximised by BFGS in unconstrained coordinates in
    which every point satisfies ``omega > 0``, ``alpha, phi, beta >= 0`` and
    persistence ``alpha + phi/2 + beta < 1``. Three fixed starting points are
    tried and the highest likelihood wins (earlier start on ties).

    ``converged`` requires the gradient norm of the per-observation
    log-likelihood in the unconstrained coordinates to be below ``gtol``.
    ``boundary`` flags a solution within ``boundary_tol`` of the stationarity
    bound or of a zero coefficient.
    """
    eps, mu = _innovations(returns, spec)
    n = eps.size
    if n < 200:
        raise ValueError(f"GARCH estimation needs at least 200 observations, have {n}")
    if n < 500:
        warnings.warn("fewer than 500 observations; GARCH estimates may be unreliable",
                      RuntimeWarning, stacklevel=2)
    gjr = spec.model == "gjr"
    s2_init = _initial_variance(eps, spec)
    sample_var = float(np.mean(eps**2))
    if sample_var <= 0:
        raise ValueError("returns have zero variance")

    def objective(u):
        theta, jac = _to_theta(u, gjr)
        ll, grad = _loglik_and_grad(theta, eps, s2_init)
        if not np.isfinite(ll):
            return np.inf, np.zeros_like(u)
        return -ll / n, -(jac.T @ grad) / n

    best = None
    records = []
    for k, (a0, g0, b0) in enumerate(_STARTS):
        phi0 = g0 if gjr else 0.0
        pi0 = a0 + 0.5 * phi0 + b0
        u0 = _from_theta((sample_var * (1.0 - pi0), a0, phi0, b0), gjr)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(objective, u0, jac=True, method="BFGS",
                           options={"gtol": gtol, "maxiter": max_iter})
        gnorm = float(np.max(np.abs(res.jac)))
        records.append({"start": k, "loglik": -res.fun * n, "iterations": int(res.nit),
                        "grad_norm": gnorm})
        if best is None or -res.fun > -best[0].fun:
            best = (res, gnorm)
    res, gnorm = best
    theta, _ = _to_theta(res.x, gjr)
    omega, alpha, phi, beta = (float(v) for v in theta)
    s2 = _variance_path(theta, eps, s2_init)
    next_var = omega + (alpha + phi * (eps[-1] < 0)) * eps[-1] ** 2 + beta * s2[-1]
    margin = 1.0 - (alpha + 0.5 * phi + beta)
    coeffs = [alpha, beta] + ([phi] if gjr else [])
    boundary = margin < boundary_tol or min(coeffs) < boundary_tol
    converged = bool(gnorm < gtol and margin > 0)
    if not converged:
        logger.warning("GARCH fit did not converge (gradient norm %.2e)", gnorm)
    dates = returns.dates if isinstance(returns, TimeSeries) else None
    if dates is None:
        dates = weekday_calendar(n)
    return GarchFit(
        spec=spec,
        omega=omega,
        alpha=alpha,
        beta=beta,
        phi=phi,
        loglik=float(-res.fun * n),
        conditional_variance=TimeSeries(dates, s2, "garch_variance"),
        residuals=TimeSeries(dates, eps, "residuals"),
        next_variance=float(next_var),
        converged=converged,
        iterations=int(res.nit),
        grad_norm=gnorm,
        mu=mu,
        boundary=bool(boundary),
        starts=records,
    )


def garch_filter(fit: GarchFit, returns: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    """Run fitted parameters over ``returns``.

    Returns the conditional variances ``sigma2_t`` and the one-step-ahead
    variances ``sigma2_{t+1|t}``, both aligned with ``returns``.
    """
    eps = returns.values - fit.mu
    s2_init = _initial_variance(eps, fit.spec)
    theta = fit.params
    s2 = _variance_path(theta, eps, s2_init)
    nxt = fit.omega + (fit.alpha + fit.phi * (eps < 0)) * eps**2 + fit.beta * s2
    return s2, nxt


def _horizon_variance(next_var: np.ndarray, omega: float, pi: float, h: int) -> np.ndarray:
    if pi >= 1:
        raise ValueError(f"persistence {pi:.4f} >= 1; multi-step forecast undefined")
    long_run = omega / (1.0 - pi)
    weight = (1.0 - pi**h) / (1.0 - pi)
    return h * long_run + (next_var - long_run) * weight


def garch_forecast(fit: GarchFit, h: int, allow_unconverged: bool = False) -> VolForecast:
    """h-day volatility forecast made at each in-sample date ``t``.

    ``E[sigma2_{t+j}] = s2bar + pi^(j-1) (sigma2_{t+1} - s2bar)`` with
    ``s2bar = omega / (1 - pi)`` and ``pi`` the persistence; the forecast is
    the square root of the sum over ``j = 1..h``.
    """
    if h <= 0:
        raise ValueError("horizon must be positive")
    if not fit.converged and not allow_unconverged:
        raise ValueError("GARCH fit did not converge")
    s2 = fit.conditional_variance.values
    nxt = np.append(s2[1:], fit.next_variance)
    var_h = _horizon_variance(nxt, fit.omega, fit.persistence, int(h))
    vals = np.sqrt(np.clip(var_h, 0.0, None))
    return VolForecast(int(h), fit.conditional_variance.with_values(vals, name=f"garch{h}"), "garch")


def garch_rolling_forecast(
    returns: TimeSeries,
    h: int,
    spec: GarchSpec = GarchSpec(),
    min_window: int = 500,
    refit_every: int = 22,
) -> VolForecast:
    """Out-of-sample h-day forecasts from an expanding estimation window.

    Parameters are re-estimated every ``refit_every`` observations on data up
    to and including the forecast origin; forecasts start at ``min_window``.
    """
    n = len(returns)
    if min_window >= n:
        raise ValueError("min_window must be smaller than the sample")
    vals = np.empty(n - min_window + 1)
    for start in range(min_window, n + 1, refit_every):
        stop = min(start + refit_every, n + 1)
        window = TimeSeries(returns.dates[:start], returns.values[:start])
        fit = garch_fit(window, spec)
        upto = TimeSeries(returns.dates[: stop - 1], returns.values[: stop - 1])
        _, nxt = garch_filter(fit, upto)
        block = _horizon_variance(nxt[start - 1: stop - 1], fit.omega, fit.persistence, int(h))
        vals[start - min_window: stop - min_window] = np.sqrt(np.clip(block, 0.0, None))
    dates = returns.dates[min_window - 1:]
    return VolForecast(int(h), TimeSeries(dates, vals, f"garch{h}"), "garch-rolling")
