"""Command-line interface.

Every subcommand loads the configured series, delegates to one library
operation and prints its table(s). Errors are reported on stderr as a
single line ``error: <category>: <message>`` with a category-specific exit
code.
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .regression import (
    day_of_week_regression,
    encompassing_regression,
    forecast_regression,
    leverage_regression,
)
from .report import Table, render
from .series import Panel, TimeSeries, align, difference, load_series, log_difference, log_returns
from .simulate import sim_ar1, sim_gaussian, sim_garch, sim_leverage, sim_var
from .stats import cross_correlation, describe, moment_zscores
from .unitroot import adf_test, kpss_test
from .var import granger_matrix, lag_select, residual_correlations, var_fit
from .vix import (
    OptionChain,
    blended_index_level,
    days_to_three_months,
    index_level,
    interpolate_skew,
    load_option_chain,
    load_skew_curves,
    skew_from_chain,
)
from .volatility import (
    GarchSpec,
    VolForecast,
    garch_fit,
    garch_forecast,
    garch_rolling_forecast,
    implied_horizon,
    realized_vol,
    riskmetrics,
)

EXIT_CODES = {"usage": 2, "config": 2, "input": 3, "data": 4, "numeric": 5, "internal": 1}

# --------------------------------------------------------------------------
# helpers


def _map(cfg: RunConfig, fn: Callable, items: Sequence):
    if cfg.jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _load(cfg: RunConfig, name: str) -> TimeSeries:
    src = cfg.source(name)
    try:
        s = load_series(src.path, src.date_column, src.value_column, src.date_format,
                        src.duplicates, name=name)
    except (FileNotFoundError, KeyError) as exc:
        raise FileNotFoundError(f"series {name!r}: {exc}") from exc
    s = s.between(cfg.start, cfg.end)
    if len(s) < 3:
        raise ValueError(f"series {name!r} has fewer than 3 observations in the selected period")
    return s


def _require(value, what: str):
    if not value:
        raise ConfigError(f"no {what} configured")
    return value


def _changes(cfg: RunConfig, name: str, s: TimeSeries) -> tuple[str, TimeSeries]:
    if name == cfg.price:
        return f"r_{name}", log_returns(s).with_values(log_returns(s).values, name=f"r_{name}")
    d = difference(s)
    return f"d_{name}", d.with_values(d.values, name=f"d_{name}")


def _summary_row(table: Table, label: str, s: TimeSeries, lb_lags: int) -> None:
    st = describe(s, lb_lags)
    zs, zk = moment_zscores(st.skewness, st.kurtosis, st.n)
    table.add(label, st.n, st.mean, st.stdev, st.min, st.max, st.skewness, st.kurtosis,
              zs, zk, st.acf1, st.acf2, st.ljung_box_q, st.ljung_box_p)


def _corr_table(title: str, series: list[TimeSeries], cfg: RunConfig) -> Table:
    panel = align(series, policy=cfg.align_policy, max_gap=cfg.max_gap)
    names = panel.names
    table = Table(title, ["series", *names])
    for a in names:
        table.add(a, *[cross_correlation(panel.columns[a], panel.columns[b], 0) for b in names])
    return table


def _ols_rows(table: Table, fit, prefix: str = "") -> None:
    for row in fit.summary_rows():
        table.add(prefix + row["term"], row["coef"], row["std_err"], row["t"], row["p"])


# --------------------------------------------------------------------------
# subcommands


def cmd_describe(cfg: RunConfig, args) -> list[Table]:
    names = list(_require(cfg.series, "series"))
    loaded = _map(cfg, lambda n: _load(cfg, n), names)
    cols = ["series", "n", "mean", "stdev", "min", "max", "skewness", "kurtosis",
            "z_skew", "z_kurt", "acf1", "acf2", "lb_q", "lb_p"]
    table = Table(f"Summary statistics (Ljung-Box lags = {cfg.lb_lags})", cols)
    for n, s in zip(names, loaded):
        _summary_row(table, n, s, cfg.lb_lags)
    changes = [_changes(cfg, n, s) for n, s in zip(names, loaded)]
    for label, s in changes:
        _summary_row(table, label, s, cfg.lb_lags)
    tables = [table]
    if len(names) >= 2:
        tables.append(_corr_table("Correlations of levels", loaded, cfg))
        tables.append(_corr_table("Correlations of changes", [c[1] for c in changes], cfg))
    return tables


def cmd_unitroot(cfg: RunConfig, args) -> list[Table]:
    names = list(_require(cfg.series, "series"))
    cols = ["series", "test", "statistic", "lags", "nobs", "cv_1%", "cv_5%", "cv_10%",
            "reject_1%", "reject_5%", "reject_10%"]
    table = Table(
        f"Unit-root tests (ADF: {cfg.adf_trend}, Schwarz lags <= {cfg.adf_max_lags}; "
        f"KPSS: level, Bartlett automatic bandwidth)", cols)

    def run(name):
        s = _load(cfg, name)
        rows = []
        for label, x in ((name, s), (f"d_{name}", difference(s))):
            for res in (adf_test(x, cfg.adf_max_lags, "schwarz", cfg.adf_trend), kpss_test(x)):
                cv, rj = res.critical_values, res.reject_at
                rows.append([label, res.test, res.statistic, res.lags_used, res.nobs,
                             cv["1%"], cv["5%"], cv["10%"], rj["1%"], rj["5%"], rj["10%"]])
        return rows

    for rows in _map(cfg, run, names):
        for row in rows:
            table.add(*row)
    return [table]


def cmd_dayofweek(cfg: RunConfig, args) -> list[Table]:
    name = args.series or _require(cfg.index, "index series ([roles] index)")
    fit = day_of_week_regression(difference(_load(cfg, name)))
    table = Table(f"Day-of-week regression for d_{name}", ["term", "coef", "std_err", "t", "p"])
    _ols_rows(table, fit)
    fit_table = Table("Fit", ["nobs", "r2", "adj_r2"])
    fit_table.add(fit.nobs, fit.r2, fit.adj_r2)
    return [table, fit_table]


def cmd_leverage(cfg: RunConfig, args) -> list[Table]:
    index = args.series or _require(cfg.index, "index series ([roles] index)")
    price = _require(cfg.price, "price series ([roles] price)")
    lev = leverage_regression(log_difference(_load(cfg, index)), log_returns(_load(cfg, price)),
                              hac_lags=args.hac_lags)
    fit = lev.base
    table = Table(f"Leverage regression: dlog({index}) on returns of {price}",
                  ["term", "coef", "std_err", "t", "p"])
    _ols_rows(table, fit)
    for label, est, se in (("beta0_plus", lev.beta0_plus, lev.beta0_plus_se),
                           ("beta0_minus", lev.beta0_minus, lev.beta0_minus_se)):
        t = est / se
        table.add(label, est, se, t, float(2.0 * stats.t.sf(abs(t), fit.df_resid)))
    fit_table = Table("Fit", ["nobs", "r2", "adj_r2", "cov_type"])
    fit_table.add(fit.nobs, fit.r2, fit.adj_r2, fit.cov_type)
    return [table, fit_table]


def _var_panel(cfg: RunConfig) -> Panel:
    names = _require(cfg.var_series, "VAR series ([roles] var)")
    if len(names) < 2:
        raise ConfigError("[roles] var needs at least two series")
    diffs = []
    for n in names:
        d = difference(_load(cfg, n))
        diffs.append(d.with_values(d.values, name=f"d_{n}"))
    return align(diffs, policy=cfg.align_policy, max_gap=cfg.max_gap)


def cmd_var(cfg: RunConfig, args) -> list[Table]:
    panel = _var_panel(cfg)
    sel = lag_select(panel, cfg.var_max_lag)
    lag_table = Table(f"Lag-order selection (common sample T = {sel.nobs})",
                      ["p", "aic", "sic", "fpe", "lr", "lr_p"])
    for row in sel.table:
        lag_table.add(row["p"], row["aic"], row["sic"], row["fpe"], row["lr_stat"], row["lr_pvalue"])
    chosen = Table("Chosen lag orders", ["criterion", "p"])
    for crit in ("aic", "sic", "fpe", "lr"):
        chosen.add(crit, sel.chosen[crit])
    fit = var_fit(panel, cfg.var_lag)
    eq = Table(f"VAR({fit.p}) equations (T = {fit.nobs})", ["equation", "r2", "adj_r2", "f", "f_p"])
    for n in fit.names:
        s = fit.equation_stats[n]
        eq.add(n, s["r2"], s["adj_r2"], s["f_stat"], s["f_pvalue"])
    corr = residual_correlations(fit)
    ct = Table("Residual correlations", ["series", *fit.names])
    for i, n in enumerate(fit.names):
        ct.add(n, *corr[i])
    tables = [lag_table, chosen, eq, ct]
    if args.coefficients:
        coef = Table("VAR coefficients", ["equation", "term", "coef", "std_err", "t", "p"])
        for n in fit.names:
            for row in fit.coefficient_table(n):
                coef.add(n, row["term"], row["coef"], row["std_err"], row["t"], row["p"])
        tables.append(coef)
    return tables


def cmd_granger(cfg: RunConfig, args) -> list[Table]:
    panel = _var_panel(cfg)
    table = Table(f"Granger causality (p = {cfg.var_lag}, {cfg.granger_mode} conditioning)",
                  ["cause", "effect", "p", "f", "p_value"])
    for res in granger_matrix(panel, cfg.var_lag, cfg.granger_mode):
        table.add(res.cause, res.effect, res.p, res.f_stat, res.p_value)
    return [table]


def _riskmetrics_forecast(returns: TimeSeries, lam: float, h: int) -> VolForecast:
    """h-day RiskMetrics forecast made at t (uses returns through t)."""
    rm = riskmetrics(returns, lam).values
    nxt = (1.0 - lam) * returns.values**2 + lam * rm
    return VolForecast(h, returns.with_values(np.sqrt(h * nxt), name=f"rm{h}"), "riskmetrics")


def _forecasters(cfg: RunConfig, h: int, returns: TimeSeries, index: TimeSeries | None,
                 garch) -> dict[str, TimeSeries]:
    out = {}
    if index is not None:
        out["implied"] = implied_horizon(index, h, cfg.implied_base).values
    out["riskmetrics"] = _riskmetrics_forecast(returns, cfg.lam, h).values
    if cfg.garch_mode == "insample":
        out["garch"] = garch_forecast(garch, h, allow_unconverged=True).values
    else:
        out["garch"] = garch_rolling_forecast(returns, h, GarchSpec(model=cfg.garch_model)).values
    return out


def _forecast_inputs(cfg: RunConfig):
    price = _require(cfg.price, "price series ([roles] price)")
    returns = log_returns(_load(cfg, price))
    index = _load(cfg, cfg.index) if cfg.index else None
    garch = None
    if cfg.garch_mode == "insample":
        garch = garch_fit(returns, GarchSpec(model=cfg.garch_model))
    elif cfg.garch_mode != "rolling":
        raise ConfigError(f"unknown garch_mode {cfg.garch_mode!r}")
    return returns, index, garch


def cmd_forecast(cfg: RunConfig, args) -> list[Table]:
    returns, index, garch = _forecast_inputs(cfg)
    table = Table(
        f"Forecast regressions on non-overlapping realized volatility (GARCH: "
        f"{cfg.garch_model}, {cfg.garch_mode})",
        ["forecaster", "h", "nobs", "alpha", "alpha_t", "beta", "beta_t", "adj_r2",
         "wald_f", "wald_p"])
    for h in cfg.horizons:
        rv = realized_vol(returns, h, "non_overlapping").values
        for name, f in _forecasters(cfg, h, returns, index, garch).items():
            fit = forecast_regression(rv, f)
            wf, wp = fit.tests["unbiased"]
            table.add(name, h, fit.nobs, fit["const"], fit.t_stats[0], fit["forecast"],
                      fit.t_stats[1], fit.adj_r2, wf, wp)
    return [table]


def cmd_encompass(cfg: RunConfig, args) -> list[Table]:
    returns, index, garch = _forecast_inputs(cfg)
    table = Table("Encompassing regressions on non-overlapping realized volatility",
                  ["f1", "f2", "h", "nobs", "alpha", "alpha_t", "beta_f1", "t_f1",
                   "gamma_f2", "t_f2", "adj_r2"])
    for h in cfg.horizons:
        rv = realized_vol(returns, h, "non_overlapping").values
        fc = _forecasters(cfg, h, returns, index, garch)
        for a, b in combinations(list(fc), 2):
            fit = encompassing_regression(rv, fc[a], fc[b])
            table.add(a, b, h, fit.nobs, fit["const"], fit.t_stats[0], fit["f1"],
                      fit.t_stats[1], fit["f2"], fit.t_stats[2], fit.adj_r2)
    return [table]


def _bracket(curves, target):
    below = [c for c in curves if c.tenor_days <= target]
    above = [c for c in curves if c.tenor_days >= target]
    if not below or not above:
        tenors = [c.tenor_days for c in curves]
        raise ValueError(f"tenors {tenors} do not bracket {target} days")
    near, nxt = below[-1], above[0]
    if near.tenor_days == nxt.tenor_days:
        nxt = next((c for c in curves if c.tenor_days > target), None) or near
        if nxt is near:
            near = below[-2] if len(below) > 1 else near
    return near, nxt


def cmd_savi(cfg: RunConfig, args) -> list[Table]:
    as_of = dt.date.fromisoformat(args.as_of) if args.as_of else None
    if args.skew:
        if as_of is None or args.spot is None:
            raise ConfigError("--skew needs --as-of and --spot")
        chain = OptionChain(as_of, (), args.spot, args.rate, args.dividend_yield)
        curves = load_skew_curves(args.skew)
        mode = "skew"
    elif args.chain:
        if args.spot is None:
            raise ConfigError("--chain needs --spot")
        chain = load_option_chain(args.chain, args.spot, args.rate, args.dividend_yield)
        as_of = chain.as_of
        mode = args.method
        curves = None
        if mode == "skew":
            curves = [skew_from_chain(chain, e) for e in chain.expiries()]
    else:
        raise ConfigError("savi needs --skew or --chain")
    target = args.target_days or days_to_three_months(as_of)
    if mode == "skew":
        if len(curves) == 1:
            skew = curves[0]
        else:
            near, nxt = _bracket(curves, target)
            skew = (near if near.tenor_days == target else
                    interpolate_skew(near, nxt, target, args.days_in_year))
        q = index_level(chain, skew, target / args.days_in_year,
                        forward_adjust=args.forward_adjust)
    else:
        exps = chain.expiries()
        near = [e for e in exps if (e - as_of).days <= target]
        nxt = [e for e in exps if (e - as_of).days > target]
        if not near or not nxt:
            raise ValueError("listed expiries do not bracket the target horizon")
        q = blended_index_level(chain, near[-1], nxt[0], target, args.days_in_year,
                                forward_adjust=args.forward_adjust)
    table = Table(f"Model-free volatility index ({mode})",
                  ["as_of", "target_days", "forward", "level", "n_puts", "n_calls"])
    table.add(as_of.isoformat(), target, q.forward, q.level, q.n_puts, q.n_calls)
    return [table]


def _matrix(raw: str) -> np.ndarray:
    return np.array([[float(x) for x in row.split(",")] for row in raw.split(";")])


def cmd_simulate(cfg: RunConfig, args) -> list[Table]:
    seed = cfg.seed
    n = args.n
    model = args.model
    if model == "gaussian":
        s = sim_gaussian(n, args.mean, args.stdev, seed)
        cols = {"value": s.values}
        dates = s.dates
    elif model == "ar1":
        s = sim_ar1(n, args.phi, args.stdev, seed)
        cols = {"value": args.mean + s.values}
        dates = s.dates
    elif model in ("garch", "gjr"):
        phi = args.leverage if model == "gjr" else 0.0
        r, v = sim_garch(args.omega, args.alpha, args.beta, phi, n, args.burn_in, seed)
        cols = {"returns": r.values, "variance": v.values}
        dates = r.dates
    elif model == "var":
        coefs = [_matrix(m) for m in (args.var_coef or ["0.5,0;0,0.5"])]
        k = coefs[0].shape[0]
        cov = _matrix(args.var_cov) if args.var_cov else np.eye(k)
        panel = sim_var(coefs, cov, n, args.burn_in, seed)
        cols = panel.columns
        dates = panel.dates
    elif model == "leverage":
        dv, r = sim_leverage(args.beta0, args.beta0_av, args.noise_sd, n, seed)
        cols = {"d_vol": dv.values, "returns": r.values}
        dates = r.dates
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown model {model!r}")
    table = Table(f"Simulated {model} (seed {seed}, n {n})", ["date", *cols])
    for i, d in enumerate(dates):
        table.add(str(d), *[float(c[i]) for c in cols.values()])
    return [table]


COMMANDS = {
    "describe": cmd_describe,
    "unitroot": cmd_unitroot,
    "dayofweek": cmd_dayofweek,
    "leverage": cmd_leverage,
    "var": cmd_var,
    "granger": cmd_granger,
    "forecast": cmd_forecast,
    "encompass": cmd_encompass,
    "savi": cmd_savi,
    "simulate": cmd_simulate,
}


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration (default: $VOLMETRICS_CONFIG)")
    common.add_argument("--from", dest="start", help="first date (YYYY-MM-DD)")
    common.add_argument("--to", dest="end", help="last date (YYYY-MM-DD)")
    common.add_argument("--period", help="named period from the [periods] section")
    common.add_argument("--format", choices=("text", "csv"), help="output format")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--jobs", type=int, help="parallel workers for per-series work")
    common.add_argument("--horizons", help="comma-separated forecast horizons")
    common.add_argument("--lambda", dest="lam", type=float, help="RiskMetrics decay")
    common.add_argument("--var-lag", type=int, help="VAR / Granger lag order")
    common.add_argument("--garch-mode", choices=("insample", "rolling"))
    common.add_argument("--implied-base", type=float,
                        help="day count for rescaling the index (252, 360 or 365)")
    common.add_argument("--output", "-o", help="write tables to this file instead of stdout")

    parser = argparse.ArgumentParser(prog="volmetrics", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("describe", "unitroot", "var", "granger", "forecast", "encompass"):
        p = sub.add_parser(name, parents=[common])
        if name == "var":
            p.add_argument("--coefficients", action="store_true", help="also print coefficients")
        if name == "granger":
            p.add_argument("--mode", choices=("system", "bivariate"))
    for name in ("dayofweek", "leverage"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--series", help="index series (default: [roles] index)")
        if name == "leverage":
            p.add_argument("--hac-lags", type=int, default=None)

    p = sub.add_parser("savi", parents=[common])
    p.add_argument("--skew", help="skew CSV (tenor_days, strike, vol)")
    p.add_argument("--chain", help="option chain CSV")
    p.add_argument("--method", choices=("skew", "blend"), default="skew")
    p.add_argument("--as-of")
    p.add_argument("--spot", type=float)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--dividend-yield", type=float, default=0.0)
    p.add_argument("--target-days", type=int)
    p.add_argument("--days-in-year", type=float, default=365.0)
    p.add_argument("--forward-adjust", action="store_true")

    p = sub.add_parser("simulate", parents=[common])
    p.add_argument("--model", choices=("gaussian", "ar1", "garch", "gjr", "var", "leverage"),
                   default="gaussian")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--mean", type=float, default=0.0)
    p.add_argument("--stdev", type=float, default=1.0)
    p.add_argument("--phi", type=float, default=0.9, help="AR(1) coefficient")
    p.add_argument("--omega", type=float, default=0.05)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--beta", type=float, default=0.90)
    p.add_argument("--leverage", type=float, default=0.08, help="GJR asymmetry term")
    p.add_argument("--var-coef", action="append",
                   help="lag coefficient matrix as 'a,b;c,d' (repeat per lag)")
    p.add_argument("--var-cov", help="innovation covariance as 'a,b;c,d'")
    p.add_argument("--beta0", type=float, default=-0.808)
    p.add_argument("--beta0-av", type=float, default=0.168)
    p.add_argument("--noise-sd", type=float, default=0.01)
    return parser


def resolve_config(args) -> RunConfig:
    path = args.config or os.environ.get("VOLMETRICS_CONFIG")
    cfg = load_config(path)
    if getattr(args, "period", None):
        cfg = cfg.with_period(args.period)
    overrides = {}
    if args.start:
        overrides["start"] = dt.date.fromisoformat(args.start)
    if args.end:
        overrides["end"] = dt.date.fromisoformat(args.end)
    if args.format:
        overrides["output_format"] = args.format
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.horizons:
        overrides["horizons"] = tuple(int(h) for h in args.horizons.split(","))
    if args.lam is not None:
        overrides["lam"] = args.lam
    if args.var_lag is not None:
        overrides["var_lag"] = args.var_lag
    if args.garch_mode:
        overrides["garch_mode"] = args.garch_mode
    if args.implied_base is not None:
        overrides["implied_base"] = args.implied_base
    if getattr(args, "mode", None):
        overrides["granger_mode"] = args.mode
    return replace(cfg, **overrides) if overrides else cfg


def _category(exc: BaseException) -> str:
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, (FileNotFoundError, KeyError, UnicodeDecodeError)):
        return "input"
    if isinstance(exc, np.linalg.LinAlgError):
        return "numeric"
    if isinstance(exc, ValueError):
        return "data"
    return "internal"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        tables = COMMANDS[args.command](cfg, args)
        if args.command == "simulate":
            # plain CSV that load_series can read back
            fmt = args.format or "csv"
            text = render(tables, fmt, titles=fmt != "csv")
        else:
            text = render(tables, cfg.output_format)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except Exception as exc:  # noqa: BLE001 - reported as one line with a category
        cat = _category(exc)
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"error: {cat}: {msg}", file=sys.stderr)
        return EXIT_CODES[cat]
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
