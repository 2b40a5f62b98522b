"""Diebold-Mariano test of equal predictive accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .backtest import StrategyLossSeries
from .errors import AlignmentError, ContractError, DegenerateVarianceError


@dataclass(frozen=True)
class DMReport:
    statistic: float
    n: int
    p_value: float
    mean_differential: float
    long_run_variance: float
    lag_window: int
    floored: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ContractError(f"p-value {self.p_value!r} outside [0, 1]")
        if self.n < 2:
            raise ContractError("n must be >= 2")
        if self.long_run_variance < 0:
            raise ContractError("long-run variance must be non-negative")


def two_sided_normal_pvalue(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def autocovariance(x: np.ndarray, lag: int) -> float:
    """Sample autocovariance at ``lag`` with divisor ``len(x)``."""
    n = len(x)
    dev = x - x.mean()
    return float(np.dot(dev[lag:], dev[: n - lag]) / n)


def long_run_variance(d: np.ndarray, lag_window: int) -> tuple[float, bool]:
    """Rectangular-kernel long-run variance; negative estimates fall back to gamma_0.

    Returns ``(variance, floored)``.
    """
    gamma0 = autocovariance(d, 0)
    total = gamma0 + 2.0 * sum(autocovariance(d, k) for k in range(1, lag_window + 1))
    if total < 0:
        return gamma0, True
    return total, False


def dm_test(
    losses_a: StrategyLossSeries,
    losses_b: StrategyLossSeries,
    lag_window: int = 0,
) -> DMReport:
    """Test H0: E[a_t - b_t] = 0 against the two-sided alternative.

    A positive statistic means series ``b`` has the lower losses.
    """
    a = np.asarray(losses_a.losses, dtype=float)
    b = np.asarray(losses_b.losses, dtype=float)
    if a.shape != b.shape or not np.array_equal(losses_a.anchors, losses_b.anchors):
        raise AlignmentError(
            f"loss series are not aligned ({len(a)} vs {len(b)} observations or differing dates)"
        )
    n = len(a)
    if n < 2:
        raise ContractError("Diebold-Mariano needs at least 2 paired observations")
    lag_window = int(lag_window)
    if not 0 <= lag_window < n:
        raise ContractError(f"lag_window must lie in [0, {n - 1}], got {lag_window}")

    d = a - b
    dbar = float(d.mean())
    variance, floored = long_run_variance(d, lag_window)
    if not variance > 0:
        raise DegenerateVarianceError(
            "loss differential has zero variance; the statistic is undefined"
        )
    stat = dbar / math.sqrt(variance / n)
    return DMReport(
        statistic=stat,
        n=n,
        p_value=two_sided_normal_pvalue(stat),
        mean_differential=dbar,
        long_run_variance=variance,
        lag_window=lag_window,
        floored=floored,
    )


def default_lag_window(horizon_days: int, n: Optional[int] = None) -> int:
    """T - 1 lags for T-step-ahead losses, clipped to what ``n`` observations allow."""
    lags = max(0, int(horizon_days) - 1)
    if n is not None:
        lags = min(lags, max(0, n - 1))
    return lags
