"""Volatility econometrics: implied-volatility index construction, EWMA and
GARCH forecasters, unit-root batteries, forecast regressions and VAR
spillover analysis."""

__version__ = "0.1.0"

from .config import ConfigError, RunConfig, load_config
from .regression import (
    LeverageFit,
    OlsFit,
    RankDeficiencyError,
    day_of_week_regression,
    encompassing_regression,
    forecast_regression,
    leverage_regression,
    ols,
)
from .series import Panel, TimeSeries, align, difference, load_series, log_difference, log_returns
from .simulate import sim_ar1, sim_garch, sim_gaussian, sim_leverage, sim_var
from .stats import SummaryStats, autocorrelation, cross_correlation, describe, ljung_box
from .unitroot import UnitRootResult, adf_critical_values, adf_test, kpss_test
from .var import GrangerResult, LagSelection, VarFit, granger_test, lag_select, var_fit
from .vix import (
    IndexQuote,
    OptionChain,
    OptionQuote,
    SkewCurve,
    blended_index_level,
    index_level,
    interpolate_skew,
)
from .volatility import (
    GarchFit,
    GarchSpec,
    VolForecast,
    garch_fit,
    garch_forecast,
    implied_horizon,
    realized_vol,
    riskmetrics,
)
