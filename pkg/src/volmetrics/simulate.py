"""Seeded data-generating processes used as test oracles.

Random numbers
--------------
Every generator draws from one fixed, portable stream so sample paths are
reproducible across platforms and implementations:

* bits: PCG64 (O'Neill 2014, XSL-RR output, 128-bit LCG state) seeded via
  ``numpy.random.PCG64(seed)``; raw 64-bit outputs from ``random_raw``.
* uniforms: ``u = ((x >> 11) + 0.5) / 2**53`` for each raw output ``x``, which
  lies strictly inside (0, 1).
* normals: ``z = Phi^{-1}(u)`` via the inverse standard normal CDF
  (``scipy.special.ndtri``), one uniform per normal, consumed in order.

Each call of a generator starts a fresh stream from its seed. Monte Carlo
harnesses derive per-replication seeds as ``seed + replication``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtri

from .series import Panel, TimeSeries

__all__ = [
    "uniform_stream",
    "normal_stream",
    "companion_radius",
    "weekday_calendar",
    "sim_gaussian",
    "sim_ar1",
    "sim_garch",
    "sim_var",
    "sim_leverage",
]

DEFAULT_START = "2000-01-03"
_TWO_POW_53 = float(2**53)


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed


def uniform_stream(seed: int, n: int) -> np.ndarray:
    """``n`` uniforms on (0, 1) from the documented PCG64 stream."""
    bits = np.random.PCG64(_check_seed(seed)).random_raw(int(n))
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) / _TWO_POW_53


def normal_stream(seed: int, n: int) -> np.ndarray:
    """``n`` standard normals by inverse-CDF transform of :func:`uniform_stream`."""
    return ndtri(uniform_stream(seed, n))


def weekday_calendar(n: int, start: str = DEFAULT_START) -> np.ndarray:
    """``n`` consecutive Monday-Friday dates beginning at (or after) ``start``."""
    return np.busday_offset(
        np.datetime64(start, "D"), np.arange(int(n)), roll="forward"
    ).astype("datetime64[D]")


def sim_gaussian(
    n: int, mean: float = 0.0, stdev: float = 1.0, seed: int = 0, start: str = DEFAULT_START
) -> TimeSeries:
    """IID normal draws on a weekday calendar."""
    if n <= 0:
        raise ValueError("n must be positive")
    if stdev < 0:
        raise ValueError("stdev must be nonnegative")
    z = normal_stream(seed, n)
    return TimeSeries(weekday_calendar(n, start), mean + stdev * z, "gaussian")


def sim_ar1(
    n: int, phi: float, sigma: float = 1.0, seed: int = 0, start: str = DEFAULT_START
) -> TimeSeries:
    """``y_t = phi * y_{t-1} + sigma * z_t`` with ``y_0 = 0``; returns ``y_1..y_n``.

    ``phi = 1`` gives a driftless random walk.
    """
    if abs(phi) > 1:
        raise ValueError("|phi| must not exceed 1")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    z = normal_stream(seed, n)
    y = lfilter([sigma], [1.0, -phi], z)
    return TimeSeries(weekday_calendar(n, start), y, "ar1")


def sim_garch(
    omega: float,
    alpha: float,
    beta: float,
    phi: float = 0.0,
    n: int = 1000,
    burn_in: int = 1000,
    seed: int = 0,
    init_variance: float | None = None,
    start: str = DEFAULT_START,
) -> tuple[TimeSeries, TimeSeries]:
    """Simulate a (GJR-)GARCH(1,1) with Gaussian shocks.

    ``sigma2_t = omega + (alpha + phi * 1[eps_{t-1} < 0]) * eps_{t-1}**2
    + beta * sigma2_{t-1}`` and ``eps_t = sqrt(sigma2_t) * z_t``.

    Returns
    -------
    returns, variance : TimeSeries
        The shocks and the latent conditional variance path, after dropping
        ``burn_in`` initial observations.
    """
    if omega <= 0 or alpha < 0 or beta < 0:
        raise ValueError("need omega > 0, alpha >= 0, beta >= 0")
    if alpha + phi < 0:
        raise ValueError("alpha + phi must be nonnegative")
    persistence = alpha + 0.5 * phi + beta
    if persistence >= 1:
        raise ValueError(f"non-stationary parameters (persistence {persistence:.4f})")
    total = int(n) + int(burn_in)
    z = normal_stream(seed, total)
    eps = np.empty(total)
    var = np.empty(total)
    s2 = omega / (1.0 - persistence) if init_variance is None else float(init_variance)
    if s2 <= 0:
        raise ValueError("init_variance must be positive")
    for t in range(total):
        var[t] = s2
        e = np.sqrt(s2) * z[t]
        eps[t] = e
        s2 = omega + (alpha + (phi if e < 0 else 0.0)) * e * e + beta * s2
    dates = weekday_calendar(n, start)
    return (
        TimeSeries(dates, eps[burn_in:], "returns"),
        TimeSeries(dates, var[burn_in:], "variance"),
    )


def companion_radius(coefficient_matrices: Sequence[np.ndarray]) -> float:
    """Spectral radius of the VAR companion matrix."""
    mats = [np.atleast_2d(np.asarray(a, dtype=float)) for a in coefficient_matrices]
    k = mats[0].shape[0]
    p = len(mats)
    comp = np.zeros((k * p, k * p))
    comp[:k, :] = np.hstack(mats)
    if p > 1:
        comp[k:, :-k] = np.eye(k * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def _cov_factor(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        if w.min() < -1e-12 * max(1.0, w.max()):
            raise ValueError("innovation covariance is not positive semidefinite")
        return v * np.sqrt(np.clip(w, 0.0, None))


def sim_var(
    coefficient_matrices: Sequence[np.ndarray],
    innovation_cov: np.ndarray,
    n: int,
    burn_in: int = 1000,
    seed: int = 0,
    intercept: Sequence[float] | None = None,
    names: Sequence[str] | None = None,
    start: str = DEFAULT_START,
) -> Panel:
    """Simulate ``x_t = c + sum_i A_i x_{t-i} + L z_t`` with ``L L' = cov``.

    Normals fill a ``(n + burn_in, K)`` array in row-major order.
    """
    mats = [np.atleast_2d(np.asarray(a, dtype=float)) for a in coefficient_matrices]
    cov = np.atleast_2d(np.asarray(innovation_cov, dtype=float))
    k = cov.shape[0]
    if cov.shape != (k, k) or not np.allclose(cov, cov.T):
        raise ValueError("innovation covariance must be a symmetric K x K matrix")
    for a in mats:
        if a.shape != (k, k):
            raise ValueError("coefficient matrices must be K x K")
    p = len(mats)
    if p and companion_radius(mats) >= 1:
        raise ValueError("explosive VAR coefficients (companion spectral radius >= 1)")
    c = np.zeros(k) if intercept is None else np.asarray(intercept, dtype=float)
    chol = _cov_factor(cov)
    total = int(n) + int(burn_in)
    shocks = normal_stream(seed, total * k).reshape(total, k) @ chol.T
    x = np.zeros((total + p, k))
    for t in range(p, total + p):
        acc = c + shocks[t - p]
        for i, a in enumerate(mats, start=1):
            acc = acc + a @ x[t - i]
        x[t] = acc
    out = x[p + burn_in:]
    names = [f"y{i}" for i in range(k)] if names is None else list(names)
    return Panel(weekday_calendar(n, start), dict(zip(names, out.T)))


def sim_leverage(
    beta0: float = -0.808,
    beta0_av: float = 0.168,
    noise_sd: float = 0.01,
    n: int = 10000,
    seed: int = 0,
    return_sd: float = 0.015,
    start: str = DEFAULT_START,
) -> tuple[TimeSeries, TimeSeries]:
    """Volatility changes driven by contemporaneous signed and absolute returns.

    ``d_vol_t = beta0 * r_t + beta0_av * |r_t| + noise_sd * u_t`` with
    ``r_t = return_sd * z_t``; the first ``n`` normals drive returns, the next
    ``n`` the noise.
    """
    if noise_sd < 0 or return_sd < 0:
        raise ValueError("standard deviations must be nonnegative")
    z = normal_stream(seed, 2 * n)
    r = return_sd * z[:n]
    d_vol = beta0 * r + beta0_av * np.abs(r) + noise_sd * z[n:]
    dates = weekday_calendar(n, start)
    return TimeSeries(dates, d_vol, "d_vol"), TimeSeries(dates, r, "returns")
