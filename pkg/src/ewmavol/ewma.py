"""EWMA one-day and T-day covariance forecasts.

The canonical estimator is the tolerance-truncated, renormalized sum

    C[t+1] = (1 - lam) / (1 - lam**N) * sum_{n=0}^{N-1} lam**n r[t-n] r[t-n]'

with N chosen so that the discarded geometric tail weighs at most the
tolerance. The infinite-sum form is only reachable through it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from . import _backend
from .errors import AlignmentError, ContractError, InsufficientDataError
from .ingest import ReturnPanel
from .realized import CovarianceMatrix

DEFAULT_TOLERANCE = 0.01

# ln(tol)/ln(lam) within this of an integer is treated as that integer, so
# that e.g. lam = tol = 0.9 gives one lag rather than ceil(1 + 1ulp) = 2.
_INTEGER_SNAP = 1e-9


def check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise ValueError(f"decay parameter must lie strictly inside (0, 1), got {lam!r}")
    return lam


@dataclass(frozen=True)
class TruncationPolicy:
    """How many lags the truncated estimator keeps.

    ``tolerance`` bounds the discarded weight; ``max_lags`` optionally caps N.
    """

    tolerance: float = DEFAULT_TOLERANCE
    max_lags: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError(f"tolerance must lie in (0, 1), got {self.tolerance!r}")
        if self.max_lags is not None and int(self.max_lags) < 1:
            raise ValueError("max_lags must be >= 1 when given")

    def lags(self, lam: float) -> int:
        n = cutoff_lags(lam, self.tolerance)
        if self.max_lags is not None:
            n = min(n, int(self.max_lags))
        return n


def cutoff_lags(lam: float, tolerance: float = DEFAULT_TOLERANCE) -> int:
    """Smallest N >= 1 with ``lam**N <= tolerance`` (ceiling of ln(tol)/ln(lam))."""
    lam = check_lambda(lam)
    if not 0.0 < tolerance < 1.0:
        raise ValueError(f"tolerance must lie in (0, 1), got {tolerance!r}")
    raw = math.log(tolerance) / math.log(lam)
    nearest = round(raw)
    if abs(raw - nearest) <= _INTEGER_SNAP * max(1.0, raw):
        n = int(nearest)
    else:
        n = math.ceil(raw)
    return max(1, n)


def _origin_check(returns: ReturnPanel, origin: int) -> int:
    origin = int(origin)
    if origin < 0:
        raise InsufficientDataError("no return history before the forecast origin", required=1, available=0)
    if origin >= returns.n_dates:
        raise IndexError(f"forecast origin {origin} outside 0..{returns.n_dates - 1}")
    return origin


def ewma_covariance_truncated(
    returns: ReturnPanel,
    forecast_origin: int,
    lam: float,
    policy: TruncationPolicy = TruncationPolicy(),
) -> CovarianceMatrix:
    """One-day-ahead EWMA covariance using returns up to and including ``forecast_origin``.

    When fewer than N rows of history exist, all available rows are used with
    the matching renormalization and the result is flagged
    ``history_limited``.
    """
    lam = check_lambda(lam)
    origin = _origin_check(returns, forecast_origin)
    n_full = policy.lags(lam)
    n_eff = min(n_full, origin + 1)

    kernels = _backend.resolve()
    window = returns.returns[origin - n_eff + 1 : origin + 1]
    cross = _backend.cross_products(window)
    weights = _backend.weight_table(np.array([lam]), n_eff)[0]
    acc = kernels.weighted_sum(cross, n_eff - 1, weights[:n_eff])
    norm = _backend.norm_table(np.array([lam]), weights[None, :])[0, n_eff]
    return CovarianceMatrix.from_upper(
        returns.symbols,
        norm * acc,
        horizon_days=1,
        anchor_date=returns.dates[origin],
        kind="forecast",
        history_limited=n_eff < n_full,
    )


def equal_weight_covariance(returns: ReturnPanel, forecast_origin: int, n_lags: int) -> CovarianceMatrix:
    """Plain average of the last ``n_lags`` cross-products (the lam -> 1 limit)."""
    origin = _origin_check(returns, forecast_origin)
    if n_lags < 1 or n_lags > origin + 1:
        raise InsufficientDataError(
            f"equal-weight average over {n_lags} lags", required=n_lags, available=origin + 1
        )
    block = returns.returns[origin - n_lags + 1 : origin + 1]
    acc = np.zeros((returns.n_assets, returns.n_assets))
    for row in block:
        acc += np.outer(row, row)
    return CovarianceMatrix(
        symbols=returns.symbols,
        horizon_days=1,
        anchor_date=returns.dates[origin],
        entries=acc / n_lags,
        kind="forecast",
    )


def ewma_update(
    prev: CovarianceMatrix,
    latest_returns: Union[Sequence[float], np.ndarray, Mapping[str, float]],
    lam: float,
    anchor_date=None,
) -> CovarianceMatrix:
    """One recursion step: ``(1 - lam) r r' + lam * prev``.

    ``latest_returns`` is either aligned to ``prev.symbols`` or a mapping
    keyed by symbol. The new anchor defaults to one calendar day after the
    previous one; pass ``anchor_date`` to follow a trading calendar.
    """
    lam = check_lambda(lam)
    if prev.kind != "forecast" or prev.horizon_days != 1:
        raise ContractError("ewma_update needs a one-day forecast matrix")
    if isinstance(latest_returns, Mapping):
        if set(latest_returns) != set(prev.symbols):
            raise AlignmentError(
                f"return symbols {sorted(latest_returns)} do not match {list(prev.symbols)}"
            )
        r = np.array([latest_returns[s] for s in prev.symbols], dtype=float)
    else:
        r = np.asarray(latest_returns, dtype=float).ravel()
        if r.shape != (prev.n_assets,):
            raise AlignmentError(f"expected {prev.n_assets} returns, got {r.size}")
    entries = (1.0 - lam) * np.outer(r, r) + lam * prev.entries
    if anchor_date is None and prev.anchor_date is not None:
        anchor_date = prev.anchor_date + np.timedelta64(1, "D")
    return prev.replace_entries(entries, anchor_date=anchor_date, history_limited=False)


def scale_to_horizon(one_day: CovarianceMatrix, horizon_days: int) -> CovarianceMatrix:
    """Flat multi-step forecast: T-day covariance is T times the one-day one."""
    if one_day.horizon_days != 1 or one_day.kind != "forecast":
        raise ContractError(
            f"expected a one-day forecast, got horizon {one_day.horizon_days} ({one_day.kind})"
        )
    horizon_days = int(horizon_days)
    if horizon_days < 1:
        raise ContractError("horizon_days must be >= 1")
    return one_day.replace_entries(horizon_days * one_day.entries, horizon_days=horizon_days)
