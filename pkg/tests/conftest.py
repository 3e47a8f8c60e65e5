"""Shared fixtures: a small synthetic data set written to CSV plus a run config."""

from __future__ import annotations

import csv
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.signal import lfilter

from volmetrics.simulate import normal_stream, sim_garch, sim_var, weekday_calendar


def write_series(path: Path, dates, values, column: str = "value") -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", column])
        for d, v in zip(dates, values):
            w.writerow([str(d), repr(float(v))])
    return path


def make_dataset(root: Path, n: int = 1200, seed: int = 7_000_000) -> Path:
    """Write index, price and three VAR series plus a skew file; return the config path."""
    dates = weekday_calendar(n + 1)
    r, _ = sim_garch(0.05, 0.05, 0.90, 0.08, n=n, seed=seed)
    r = r.values / 100.0
    price = 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(r)]))

    # log index: AR(0.97) driven by signed and absolute returns plus noise
    u = normal_stream(seed + 1, n)
    shock = -0.8 * r + 0.17 * np.abs(r) + 0.01 * u
    x = lfilter([1.0], [1.0, -0.97], shock)
    index = 25.0 * np.exp(np.concatenate([[0.0], x - x.mean()]))

    a1 = np.array([[0.2, 0.1, 0.0], [0.25, 0.1, 0.0], [0.1, 0.2, 0.1]])
    panel = sim_var([a1], 0.25 * np.eye(3) + 0.05, n + 1, seed=seed + 2)
    levels = {f"s{i}": 60.0 + np.cumsum(panel.columns[f"y{i}"]) for i in range(3)}

    write_series(root / "index.csv", dates, index)
    write_series(root / "price.csv", dates, price, column="close")
    with open(root / "var.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *levels])
        for i, d in enumerate(dates):
            w.writerow([str(d), *[repr(float(levels[k][i])) for k in levels]])

    with open(root / "skew.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tenor_days", "strike", "vol"])
        for tenor, atm in ((60, 22.0), (120, 20.0)):
            for k in range(40, 161):
                w.writerow([tenor, k, atm + 0.1 * (100 - k)])

    cfg = root / "run.ini"
    cfg.write_text(
        "[series]\n"
        "idx = index.csv\n"
        "px = price.csv#close\n"
        "s0 = var.csv#s0\n"
        "s1 = var.csv#s1\n"
        "s2 = var.csv#s2\n"
        "\n[roles]\n"
        "index = idx\n"
        "price = px\n"
        "var = s0, s1, s2\n"
        "\n[periods]\n"
        f"full = {dates[0]}:{dates[-1]}\n"
        f"sub1 = {dates[0]}:{dates[599]}\n"
        f"sub2 = {dates[600]}:{dates[-1]}\n"
        "\n[params]\n"
        "horizons = 5, 10, 22\n"
        "lambda = 0.94\n"
        "var_lag = 2\n"
        "var_max_lag = 4\n",
        encoding="utf-8",
    )
    return cfg


@pytest.fixture(scope="session")
def dataset(tmp_path_factory) -> Path:
    return make_dataset(tmp_path_factory.mktemp("data"))


# ---------------------------------------------------------------- acceptance log

ACCEPTANCE = pytest.StashKey[dict]()
SUITE_START = pytest.StashKey[float]()
SUITE_BUDGET_S = 300.0


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}
    config.stash[SUITE_START] = time.perf_counter()


@pytest.fixture
def record(request):
    """Record one acceptance criterion outcome as ``(passed, detail)``."""
    log = request.config.stash[ACCEPTANCE]

    def _record(number: int, passed: bool, detail: str) -> None:
        log[number] = (bool(passed), detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash[ACCEPTANCE]
    if not log:
        return
    elapsed = time.perf_counter() - config.stash[SUITE_START]
    if 10 in log:
        ok, detail = log[10]
        within = elapsed < SUITE_BUDGET_S
        log[10] = (ok and within, f"{detail}; session {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)")
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        ok, detail = log[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
