"""Vector autoregression, lag-order selection and Granger causality."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy import stats

from .regression import RankDeficiencyError, ols
from .series import Panel
from .stats import chi2_sf

__all__ = [
    "VarFit",
    "LagSelection",
    "GrangerResult",
    "var_fit",
    "lag_select",
    "granger_test",
    "granger_matrix",
    "residual_correlations",
]


def _lagged_design(data: np.ndarray, p: int, start: int | None = None):
    """Rows ``t = start..T-1`` of ``[1, x_{t-1}, ..., x_{t-p}]``."""
    t_total, k = data.shape
    start = p if start is None else start
    rows = np.arange(start, t_total)
    blocks = [np.ones((rows.size, 1))]
    blocks += [data[rows - i] for i in range(1, p + 1)]
    return data[rows], np.hstack(blocks), rows


def _regressor_names(names: Sequence[str], p: int) -> list[str]:
    return ["const"] + [f"{n}.L{i}" for i in range(1, p + 1) for n in names]


@dataclass(frozen=True, eq=False)
class VarFit:
    p: int
    names: list[str]
    intercept: np.ndarray
    coefs: np.ndarray  # (p, K, K): coefs[i-1][eq, var] multiplies var at lag i
    std_errors: np.ndarray  # (1 + K p, K), same layout as params
    params: np.ndarray  # (1 + K p, K)
    residuals: Panel
    sigma: np.ndarray
    sigma_ml: np.ndarray
    nobs: int
    equation_stats: dict
    regressor_names: list[str] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.names)

    def coefficient_table(self, equation: str) -> list[dict]:
        j = self.names.index(equation)
        t = self.params[:, j] / self.std_errors[:, j]
        dof = self.nobs - self.params.shape[0]
        pv = 2.0 * stats.t.sf(np.abs(t), dof)
        return [
            {"term": n, "coef": float(c), "std_err": float(s), "t": float(tv), "p": float(pp)}
            for n, c, s, tv, pp in zip(self.regressor_names, self.params[:, j],
                                       self.std_errors[:, j], t, pv)
        ]


def _fit_block(y: np.ndarray, x: np.ndarray, names: list[str]):
    """Multi-response least squares sharing one design; checks rank via QR."""
    q, r = np.linalg.qr(x)
    diag = np.abs(np.diag(r))
    bad = np.flatnonzero(diag < 1e-10 * diag.max())
    if bad.size:
        cols = [names[i] for i in bad]
        raise RankDeficiencyError(f"collinear lagged regressors: {cols}", cols)
    params = np.linalg.solve(r, q.T @ y)
    resid = y - x @ params
    return params, resid, r


def var_fit(panel: Panel, p: int = 8) -> VarFit:
    """Equation-by-equation OLS of each column on ``p`` lags of all columns.

    ``sigma`` is the residual covariance with ``T - Kp - 1`` degrees of
    freedom; ``sigma_ml`` divides by ``T``.
    """
    names = panel.names
    k = len(names)
    data = panel.values()
    t_total = data.shape[0]
    if p < 1:
        raise ValueError("lag order must be at least 1")
    if t_total <= k * p + k + 10:
        raise ValueError(f"need more than K*p + K + 10 = {k * p + k + 10} observations")
    y, x, rows = _lagged_design(data, p)
    reg_names = _regressor_names(names, p)
    params, resid, r = _fit_block(y, x, reg_names)
    nobs, m = x.shape
    dof = nobs - m
    sigma = resid.T @ resid / dof
    sigma_ml = resid.T @ resid / nobs
    r_inv = np.linalg.solve(r, np.eye(m))
    xtx_inv_diag = np.sum(r_inv**2, axis=1)
    se = np.sqrt(np.outer(xtx_inv_diag, np.diag(sigma)))

    eq_stats = {}
    for j, n in enumerate(names):
        rss = float(resid[:, j] @ resid[:, j])
        dev = y[:, j] - y[:, j].mean()
        tss = float(dev @ dev)
        r2 = 1.0 - rss / tss if tss > 0 else float("nan")
        adj = 1.0 - (1.0 - r2) * (nobs - 1) / dof
        q = m - 1
        f_stat = ((tss - rss) / q) / (rss / dof) if rss > 0 else float("inf")
        eq_stats[n] = {
            "r2": r2,
            "adj_r2": adj,
            "f_stat": f_stat,
            "f_pvalue": float(stats.f.sf(f_stat, q, dof)),
        }
    intercept = params[0]
    coefs = params[1:].reshape(p, k, k).transpose(0, 2, 1)
    return VarFit(
        p=p,
        names=names,
        intercept=intercept,
        coefs=coefs,
        std_errors=se,
        params=params,
        residuals=Panel(panel.dates[rows], dict(zip(names, resid.T))),
        sigma=sigma,
        sigma_ml=sigma_ml,
        nobs=nobs,
        equation_stats=eq_stats,
        regressor_names=reg_names,
    )


@dataclass(frozen=True)
class LagSelection:
    table: list[dict]
    chosen: dict
    nobs: int
    p_max: int


def lag_select(panel: Panel, p_max: int = 8, lr_level: float = 0.05) -> LagSelection:
    """Information criteria for VAR(1..p_max) on one common sample.

    With ``T`` the common effective sample and ``S_p`` the ML residual
    covariance of VAR(p):

    * ``AIC = ln det S_p + 2 p K^2 / T``
    * ``SIC = ln det S_p + ln(T) p K^2 / T``
    * ``FPE = ((T + Kp + 1) / (T - Kp - 1))^K det S_p``
    * ``LR = (T - Kp)(ln det S_{p-1} - ln det S_p)``, chi-square(K^2).

    The LR choice tests downward from ``p_max`` and stops at the first
    rejection; if none rejects, the smallest order (1) is chosen.
    """
    names = panel.names
    k = len(names)
    data = panel.values()
    t_total = data.shape[0]
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    nobs = t_total - p_max
    if nobs <= k * p_max + k + 10:
        raise ValueError(f"p_max={p_max} too large for {t_total} observations")

    logdets = {}
    for p in range(0, p_max + 1):
        y, x, _ = _lagged_design(data, p, start=p_max)
        _, resid, _ = _fit_block(y, x, _regressor_names(names, p))
        sign, logdet = np.linalg.slogdet(resid.T @ resid / nobs)
        if sign <= 0:
            raise np.linalg.LinAlgError("singular residual covariance")
        logdets[p] = logdet

    table = []
    for p in range(1, p_max + 1):
        ld = logdets[p]
        lr = (nobs - k * p) * (logdets[p - 1] - ld)
        table.append({
            "p": p,
            "aic": ld + 2.0 * p * k * k / nobs,
            "sic": ld + np.log(nobs) * p * k * k / nobs,
            "fpe": ((nobs + k * p + 1) / (nobs - k * p - 1)) ** k * np.exp(ld),
            "lr_stat": lr,
            "lr_pvalue": chi2_sf(lr, k * k),
        })
    chosen = {
        crit: min(table, key=lambda row: row[crit])["p"] for crit in ("aic", "sic", "fpe")
    }
    chosen["lr"] = 1
    for row in reversed(table):
        if row["lr_pvalue"] < lr_level:
            chosen["lr"] = row["p"]
            break
    return LagSelection(table=table, chosen=chosen, nobs=nobs, p_max=p_max)


@dataclass(frozen=True)
class GrangerResult:
    cause: str
    effect: str
    p: int
    f_stat: float
    p_value: float
    df_num: int
    df_den: int
    mode: str = "system"


def granger_test(
    panel: Panel,
    cause: str,
    effect: str,
    p: int = 8,
    mode: Literal["system", "bivariate"] = "system",
) -> GrangerResult:
    """F-test that ``p`` lags of ``cause`` add nothing to the ``effect`` equation.

    In ``system`` mode the lags of every panel column are retained in both
    the restricted and unrestricted regressions; ``bivariate`` uses only the
    cause and effect columns.
    """
    if cause not in panel.columns or effect not in panel.columns:
        raise KeyError(f"unknown column(s): {cause!r}, {effect!r}")
    if cause == effect:
        raise ValueError("cause and effect must be different columns")
    if p < 1:
        raise ValueError("lag order must be at least 1")
    if np.array_equal(panel.columns[cause], panel.columns[effect]):
        raise RankDeficiencyError("cause and effect columns are identical", [cause, effect])
    if mode == "bivariate":
        panel = panel.select([effect, cause])
    elif mode != "system":
        raise ValueError(f"unknown mode {mode!r}")
    names = panel.names
    k = len(names)
    data = panel.values()
    if data.shape[0] <= k * p + k + 10:
        raise ValueError("insufficient observations for the requested lag order")
    y_all, x_full, _ = _lagged_design(data, p)
    y = y_all[:, names.index(effect)]
    reg_names = _regressor_names(names, p)
    drop = [i for i, n in enumerate(reg_names) if n.rsplit(".L", 1)[0] == cause]
    keep = [i for i in range(len(reg_names)) if i not in drop]
    unrestricted = ols(y, x_full, names=reg_names)
    restricted = ols(y, x_full[:, keep], names=[reg_names[i] for i in keep])
    df_den = unrestricted.df_resid
    f_stat = ((restricted.rss - unrestricted.rss) / p) / (unrestricted.rss / df_den)
    f_stat = max(f_stat, 0.0)
    return GrangerResult(
        cause=cause,
        effect=effect,
        p=p,
        f_stat=float(f_stat),
        p_value=float(stats.f.sf(f_stat, p, df_den)),
        df_num=p,
        df_den=df_den,
        mode=mode,
    )


def granger_matrix(panel: Panel, p: int = 8, mode: str = "system") -> list[GrangerResult]:
    """Granger tests for every ordered pair of distinct columns."""
    return [
        granger_test(panel, c, e, p, mode)
        for e in panel.names
        for c in panel.names
        if c != e
    ]


def residual_correlations(fit: VarFit) -> np.ndarray:
    """Contemporaneous correlation matrix of the VAR residuals."""
    if fit.k < 2:
        raise ValueError("need at least two equations")
    resid = fit.residuals.values()
    dev = resid - resid.mean(axis=0)
    ss = np.sqrt(np.sum(dev**2, axis=0))
    if np.any(ss == 0):
        raise ValueError("degenerate (constant) residual column")
    corr = (dev.T @ dev) / np.outer(ss, ss)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr
