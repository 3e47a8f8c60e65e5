import numpy as np
import pytest

from volmetrics.regression import ols
from volmetrics.simulate import normal_stream, sim_ar1
from volmetrics.unitroot import (
    KPSS_CRITICAL_VALUES,
    adf_critical_values,
    adf_test,
    kpss_test,
    simulate_df_null,
    simulate_kpss_null,
)

LEVELS = ("1%", "5%", "10%")


def test_asymptotic_adf_values():
    # published asymptotic Dickey-Fuller quantiles
    assert adf_critical_values("constant")["5%"] == pytest.approx(-2.8615, abs=1e-3)
    assert adf_critical_values("constant+trend")["1%"] == pytest.approx(-3.9589, abs=1e-3)
    assert adf_critical_values("none")["10%"] == pytest.approx(-1.6168, abs=1e-3)


@pytest.mark.parametrize("trend", ["none", "constant", "constant+trend"])
def test_critical_values_monotone(trend):
    for n in (50, 200, None):
        cv = adf_critical_values(trend, n)
        assert cv["1%"] < cv["5%"] < cv["10%"]
    kp = KPSS_CRITICAL_VALUES.get(trend)
    if kp:
        assert kp["1%"] > kp["5%"] > kp["10%"]


def test_adf_statistic_by_hand():
    y = np.cumsum(normal_stream(21, 300))
    res = adf_test(y, max_lags=2, selection="fixed")
    dy = np.diff(y)
    t = np.arange(3, 300)  # rows with two lagged differences available
    x = np.column_stack([np.ones(t.size), y[t - 1], dy[t - 2], dy[t - 3]])
    fit = ols(dy[t - 1], x)
    assert res.statistic == pytest.approx(fit.t_stats[1], rel=1e-12)
    assert res.lags_used == 2 and res.nobs == t.size


def test_adf_reject_flags_follow_critical_values():
    res = adf_test(normal_stream(22, 400))
    for lvl in LEVELS:
        assert res.reject_at[lvl] == (res.statistic < res.critical_values[lvl])


def test_adf_invariances():
    y = np.cumsum(normal_stream(23, 500))
    a = adf_test(y)
    b = adf_test(y + 1234.5)
    assert b.statistic == pytest.approx(a.statistic, abs=1e-8)
    f = adf_test(y, max_lags=0, selection="fixed")
    s = adf_test(y, max_lags=0, selection="schwarz")
    assert f.statistic == s.statistic


def test_adf_selects_lags_for_ar2_differences():
    z = normal_stream(24, 3000)
    dy = np.zeros(3000)
    for t in range(2, 3000):
        dy[t] = 0.5 * dy[t - 1] - 0.3 * dy[t - 2] + z[t]
    res = adf_test(np.cumsum(dy), max_lags=8)
    assert res.lags_used == 2


def test_adf_errors():
    with pytest.raises(ValueError):
        adf_test(np.arange(15.0), max_lags=8)
    with pytest.raises(ValueError):
        adf_test(np.cumsum(normal_stream(1, 100)), trend_spec="quadratic")


def test_kpss_statistic_by_hand():
    y = normal_stream(25, 200) + 0.3 * np.arange(200) / 200
    res = kpss_test(y, bandwidth=4)
    e = y - y.mean()
    lrv = e @ e / 200
    for j in range(1, 5):
        lrv += 2 * (1 - j / 5) * (e[j:] @ e[:-j]) / 200
    s = np.cumsum(e)
    assert res.statistic == pytest.approx((s @ s) / (200**2 * lrv), rel=1e-12)
    assert kpss_test(y).lags_used == int(4 * (200 / 100) ** 0.25)


def test_kpss_invariances():
    y = np.cumsum(normal_stream(26, 400))
    a = kpss_test(y)
    assert kpss_test(y + 50.0).statistic == pytest.approx(a.statistic, rel=1e-10)
    assert kpss_test(7.5 * y).statistic == pytest.approx(a.statistic, rel=1e-10)
    for lvl in LEVELS:
        assert a.reject_at[lvl] == (a.statistic > a.critical_values[lvl])


def test_kpss_errors():
    with pytest.raises(ValueError):
        kpss_test(np.arange(10.0))
    with pytest.raises(ValueError):
        kpss_test(np.ones(100))


def test_differenced_random_walk_is_stationary():
    keep = 0
    for rep in range(20):
        y = sim_ar1(1000, 1.0, seed=8_000_000 + 1000 * rep).values
        assert adf_test(np.diff(y)).reject_at["1%"]
        assert kpss_test(y).reject_at["5%"]
        keep += not kpss_test(np.diff(y)).reject_at["5%"]
    assert keep >= 16


def test_null_simulators_match_loop_computation():
    stats = simulate_df_null(3, 100, "constant", seed=40)
    for r in range(3):
        y = np.cumsum(normal_stream(40 + r, 101))
        assert stats[r] == pytest.approx(adf_test(y, 0, "fixed").statistic, rel=1e-9)
    kp = simulate_kpss_null(2, 100, "constant", seed=50)
    for r in range(2):
        assert kp[r] == pytest.approx(kpss_test(normal_stream(50 + r, 100), 0).statistic, rel=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("trend", ["none", "constant", "constant+trend"])
def test_embedded_adf_table_by_monte_carlo(trend):
    """50,000-replication null simulation; every quantile within 0.02 of the table."""
    nobs = 500
    draws = simulate_df_null(50_000, nobs, trend, seed=0)
    cv = adf_critical_values(trend, nobs)
    q = dict(zip(LEVELS, np.quantile(draws, [0.01, 0.05, 0.10])))
    bad = {lvl: (q[lvl], cv[lvl]) for lvl in LEVELS if abs(q[lvl] - cv[lvl]) > 0.02}
    assert not bad, f"simulated vs tabulated quantiles outside 0.02: {bad}"


@pytest.mark.slow
@pytest.mark.parametrize("trend", ["constant", "constant+trend"])
def test_embedded_kpss_table_by_monte_carlo(trend):
    draws = simulate_kpss_null(50_000, 500, trend, seed=0)
    cv = KPSS_CRITICAL_VALUES[trend]
    q = dict(zip(LEVELS, np.quantile(draws, [0.99, 0.95, 0.90])))
    bad = {lvl: (q[lvl], cv[lvl]) for lvl in LEVELS if abs(q[lvl] - cv[lvl]) > 0.02}
    assert not bad, f"simulated vs tabulated quantiles outside 0.02: {bad}"
