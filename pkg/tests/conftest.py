import os

import numpy as np
import pandas as pd
import pytest

from ewmavol import ReturnPanel

ACCEPTANCE_RESULTS = {}


def make_returns(rng, n_days, n_assets, scale=0.01, start="2000-01-03"):
    dates = pd.bdate_range(start, periods=n_days).to_numpy().astype("datetime64[D]")
    symbols = [f"A{i:02d}" for i in range(n_assets)]
    return ReturnPanel(dates, symbols, rng.standard_normal((n_days, n_assets)) * scale)


def write_prices(path, rng, n_days=301, n_assets=3):
    dates = pd.bdate_range("2015-01-02", periods=n_days)
    steps = rng.standard_normal((n_days, n_assets)) * 0.01
    prices = 100 * np.exp(np.cumsum(steps, axis=0))
    frame = pd.DataFrame(prices, columns=[f"S{i}" for i in range(n_assets)])
    frame.insert(0, "date", dates.strftime("%Y-%m-%d"))
    frame.to_csv(path, index=False, float_format="%.10f")
    os.utime(path, (1_500_000_000, 1_500_000_000))
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


class _Recorder:
    def __init__(self):
        self.detail = ""

    def note(self, text):
        self.detail = text


@pytest.fixture
def criterion():
    """Free-text detail shown next to an acceptance criterion in the summary."""
    return _Recorder()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        rec = getattr(item, "funcargs", {}).get("criterion")
        detail = rec.detail if rec is not None else ""
        if rep.skipped and not detail:
            detail = str(rep.longrepr[-1]) if isinstance(rep.longrepr, tuple) else ""
        ACCEPTANCE_RESULTS[marker.args[0]] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split(".")[0])):
        status, detail = ACCEPTANCE_RESULTS[label]
        suffix = f" -- {detail}" if detail else ""
        terminalreporter.write_line(f"[{status}] {label}{suffix}")
