import mpmath
import numpy as np
import pytest
from scipy import stats

from volmetrics.regression import (
    RankDeficiencyError,
    day_of_week_regression,
    encompassing_regression,
    forecast_regression,
    leverage_regression,
    ols,
)
from volmetrics.series import TimeSeries
from volmetrics.simulate import normal_stream, sim_leverage, weekday_calendar


def normal_equations_oracle(y, x, dps=50):
    """Solve X'X b = X'y in extended precision."""
    with mpmath.workdps(dps):
        X = mpmath.matrix(x.tolist())
        Y = mpmath.matrix(y.tolist())
        b = mpmath.lu_solve(X.T * X, X.T * Y)
        return np.array([float(v) for v in b])


def random_problem(seed, n=None, k=None):
    u = normal_stream(seed, 3)
    n = n or int(20 + abs(u[0]) * 60) % 181 + 20
    k = k or int(abs(u[1]) * 10) % 8 + 1
    z = normal_stream(seed + 1, n * k + n)
    x = z[: n * k].reshape(n, k)
    beta = np.arange(1, k + 1, dtype=float)
    y = x @ beta + z[n * k:]
    return y, x


def test_ols_matches_extended_precision_oracle():
    for i in range(10):
        y, x = random_problem(6_000_000 + 10 * i)
        fit = ols(y, x)
        ref = normal_equations_oracle(y, x)
        assert np.allclose(fit.coefficients, ref, rtol=1e-10, atol=0)


def test_classical_inference_by_hand():
    y, x = random_problem(6_100_000, n=80, k=3)
    fit = ols(y, x, intercept=True)
    X = np.column_stack([np.ones(80), x])
    b = np.linalg.solve(X.T @ X, X.T @ y)
    e = y - X @ b
    s2 = e @ e / (80 - 4)
    se = np.sqrt(np.diag(s2 * np.linalg.inv(X.T @ X)))
    assert np.allclose(fit.std_errors, se, rtol=1e-10)
    assert np.allclose(fit.p_values, 2 * stats.t.sf(np.abs(b / se), 76), rtol=1e-8)
    r2 = 1 - e @ e / np.sum((y - y.mean()) ** 2)
    assert fit.r2 == pytest.approx(r2, rel=1e-12)
    assert fit.adj_r2 == pytest.approx(1 - (1 - r2) * 79 / 76, rel=1e-12)
    assert fit.names[0] == "const" and fit.df_resid == 76


def test_centered_r2_detects_implicit_constant():
    # dummies spanning a constant
    d = np.repeat(np.eye(4), 25, axis=0)
    y = normal_stream(7, 100)
    fit = ols(y, d)
    assert fit.r2 == pytest.approx(1 - fit.rss / np.sum((y - y.mean()) ** 2))


def hac_oracle(x, e, lags):
    n, k = x.shape
    s = np.zeros((k, k))
    for t in range(n):
        s += e[t] ** 2 * np.outer(x[t], x[t])
    for lag in range(1, lags + 1):
        w = 1 - lag / (lags + 1)
        for t in range(lag, n):
            g = e[t] * e[t - lag] * np.outer(x[t], x[t - lag])
            s += w * (g + g.T)
    bread = np.linalg.inv(x.T @ x)
    return bread @ s @ bread


@pytest.mark.parametrize("lags", [0, 1, 4])
def test_newey_west_against_loop_oracle(lags):
    y, x = random_problem(6_200_000 + lags, n=120, k=3)
    fit = ols(y, x, hac_lags=lags)
    ref = hac_oracle(x, fit.residuals, lags)
    assert np.allclose(fit.cov, ref, rtol=1e-10)
    assert fit.cov_type == f"hac({lags})"


def test_hac_zero_equals_white():
    y, x = random_problem(6_300_000, n=150, k=4)
    e = ols(y, x).residuals
    bread = np.linalg.inv(x.T @ x)
    white = bread @ (x.T * e**2) @ x @ bread
    assert np.allclose(ols(y, x, hac_lags=0).cov, white, rtol=1e-10)


def test_rank_deficiency_names_column():
    y, x = random_problem(6_400_000, n=50, k=2)
    x = np.column_stack([x, x[:, 0] + 2 * x[:, 1]])
    with pytest.raises(RankDeficiencyError) as info:
        ols(y, x, names=["a", "b", "c"])
    assert info.value.columns == ["c"]
    with pytest.raises(np.linalg.LinAlgError):
        ols(y, np.column_stack([np.ones(50), np.ones(50)]))


def test_input_validation():
    with pytest.raises(ValueError):
        ols(np.ones(3), np.ones((3, 3)))
    with pytest.raises(ValueError):
        ols(np.ones(5), np.ones((4, 1)))
    with pytest.raises(ValueError):
        ols(np.array([1.0, np.nan, 2, 3, 4]), np.arange(5.0))


def test_wald_and_lincom():
    y, x = random_problem(6_500_000, n=200, k=2)
    fit = ols(y, x, intercept=True)
    est, se = fit.lincom([0, 1, 1])
    assert est == pytest.approx(fit.coefficients[1] + fit.coefficients[2])
    assert se == pytest.approx(np.sqrt(fit.cov[1, 1] + fit.cov[2, 2] + 2 * fit.cov[1, 2]))
    # a single restriction reproduces the squared t statistic
    f, p = fit.wald([[0, 1, 0]], [0.0])
    assert f == pytest.approx(fit.t_stats[1] ** 2)
    assert p == pytest.approx(fit.p_values[1], rel=1e-8)


def test_day_of_week_coefficients_are_group_means():
    n = 260
    dates = weekday_calendar(n)
    v = normal_stream(8, n)
    fit = day_of_week_regression(TimeSeries(dates, v))
    wd = (dates.view("int64") - 4) % 7
    for j, name in enumerate(["Mon", "Tue", "Wed", "Thu", "Fri"]):
        assert fit[name] == pytest.approx(v[wd == j].mean(), rel=1e-12)


def test_day_of_week_errors():
    dates = np.datetime64("2020-01-04") + np.arange(40)  # includes weekends
    with pytest.raises(ValueError):
        day_of_week_regression(TimeSeries(dates, normal_stream(1, 40)))
    dates = weekday_calendar(100)
    mondays = (dates.view("int64") - 4) % 7 == 0
    with pytest.raises(ValueError):
        day_of_week_regression(TimeSeries(dates[~mondays], normal_stream(1, (~mondays).sum())))


def test_leverage_recovery_small():
    dv, r = sim_leverage(n=3000, seed=6_600_000)
    lev = leverage_regression(dv, r)
    assert lev.base["r"] == pytest.approx(-0.808, abs=0.05)
    assert lev.base["abs_r"] == pytest.approx(0.168, abs=0.08)
    assert lev.beta0_plus == lev.base["r"] + lev.base["abs_r"]
    assert lev.beta0_minus == lev.base["r"] - lev.base["abs_r"]


def test_forecast_regression_unbiased_forecaster():
    n = 2000
    dates = weekday_calendar(n)
    f = 1.0 + 0.2 * np.abs(normal_stream(9, n))
    rv = f + 0.1 * normal_stream(10, n)
    fit = forecast_regression(TimeSeries(dates, rv), TimeSeries(dates, f))
    assert fit["forecast"] == pytest.approx(1.0, abs=0.1)
    f_stat, p = fit.tests["unbiased"]
    assert p > 0.001


def test_encompassing_degenerate_and_collinear():
    n = 500
    dates = weekday_calendar(n)
    f1 = 1 + 0.3 * np.abs(normal_stream(11, n))
    rv = 1 + 0.3 * np.abs(normal_stream(12, n))
    fit = encompassing_regression(TimeSeries(dates, rv), TimeSeries(dates, f1), TimeSeries(dates, rv))
    assert fit["f2"] == pytest.approx(1.0, abs=1e-8)
    assert fit["f1"] == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(RankDeficiencyError):
        encompassing_regression(TimeSeries(dates, rv), TimeSeries(dates, f1),
                                TimeSeries(dates, 2 * f1 + 1))
