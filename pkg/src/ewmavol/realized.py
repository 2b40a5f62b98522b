"""Ex-post realized covariance over T-day windows (the backtest target)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import ContractError, DegenerateVolatilityError, InsufficientDataError
from .ingest import ReturnPanel

Kind = Literal["realized", "forecast"]

# Correlations this close to +/-1 are clamped; anything further out is a bug.
_CLAMP_SLACK = 1e-12


def upper_indices(n_assets: int):
    """Row-major upper-triangle index pairs (i <= j), diagonal included."""
    return np.triu_indices(n_assets)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetric (co)variance matrix for one anchor date and horizon.

    Only the upper triangle of ``entries`` is read on construction; the
    lower triangle is mirrored from it so symmetry holds exactly.
    """

    symbols: tuple
    horizon_days: int
    anchor_date: Optional[np.datetime64]
    entries: np.ndarray
    kind: Kind
    history_limited: bool = False

    def __post_init__(self):
        symbols = tuple(self.symbols)
        a = len(symbols)
        raw = np.asarray(self.entries, dtype=float)
        if raw.shape != (a, a):
            raise ContractError(f"entries shape {raw.shape} != ({a}, {a})")
        if self.kind not in ("realized", "forecast"):
            raise ContractError(f"unknown kind {self.kind!r}")
        if int(self.horizon_days) < 1:
            raise ContractError("horizon_days must be >= 1")
        upper = np.triu(raw)
        full = upper + np.triu(raw, 1).T
        full.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "horizon_days", int(self.horizon_days))
        object.__setattr__(self, "entries", full)
        if self.anchor_date is not None:
            object.__setattr__(self, "anchor_date", np.datetime64(self.anchor_date, "D"))

    @classmethod
    def from_upper(cls, symbols: Sequence[str], upper: np.ndarray, **kwargs) -> "CovarianceMatrix":
        a = len(symbols)
        full = np.zeros((a, a))
        full[upper_indices(a)] = upper
        return cls(symbols=tuple(symbols), entries=full, **kwargs)

    @property
    def n_assets(self) -> int:
        return len(self.symbols)

    def upper(self) -> np.ndarray:
        """Upper triangle (diagonal included) in row-major order."""
        return self.entries[upper_indices(self.n_assets)]

    def get(self, i: str, j: str) -> float:
        return float(self.entries[self.symbols.index(i), self.symbols.index(j)])

    def replace_entries(self, entries: np.ndarray, **changes) -> "CovarianceMatrix":
        fields = dict(
            symbols=self.symbols,
            horizon_days=self.horizon_days,
            anchor_date=self.anchor_date,
            kind=self.kind,
            history_limited=self.history_limited,
        )
        fields.update(changes)
        return CovarianceMatrix(entries=entries, **fields)


def _window(returns: ReturnPanel, window_end: int, horizon_days: int) -> np.ndarray:
    if horizon_days < 1:
        raise ContractError("horizon_days must be >= 1")
    if not 0 <= window_end < returns.n_dates:
        raise IndexError(f"window_end {window_end} outside 0..{returns.n_dates - 1}")
    available = window_end + 1
    if available < horizon_days:
        raise InsufficientDataError(
            f"realized window of {horizon_days} days ending at row {window_end}",
            required=horizon_days,
            available=available,
        )
    return returns.returns[window_end - horizon_days + 1 : window_end + 1]


def realized_covariance(returns: ReturnPanel, window_end: int, horizon_days: int) -> CovarianceMatrix:
    """Sum of return cross-products over the ``horizon_days`` rows ending at ``window_end``.

    Returns are not demeaned. Accumulation is chronological.
    """
    block = _window(returns, window_end, horizon_days)
    acc = np.zeros((returns.n_assets, returns.n_assets))
    for row in block:
        acc += np.outer(row, row)
    return CovarianceMatrix(
        symbols=returns.symbols,
        horizon_days=horizon_days,
        anchor_date=returns.dates[window_end],
        entries=acc,
        kind="realized",
    )


def realized_volatility(returns: ReturnPanel, asset: str, window_end: int, horizon_days: int) -> float:
    col = returns.symbol_index(asset)
    block = _window(returns, window_end, horizon_days)[:, col]
    acc = 0.0
    for x in block:
        acc += x * x
    return math.sqrt(acc)


def realized_correlation(cov: CovarianceMatrix, i: str, j: str) -> float:
    """Correlation implied by a covariance matrix, ``c_ij / sqrt(c_ii c_jj)``."""
    vi, vj = cov.get(i, i), cov.get(j, j)
    if not (vi > 0 and vj > 0):
        zero = i if not vi > 0 else j
        raise DegenerateVolatilityError(f"variance of {zero!r} is {min(vi, vj)!r}; correlation undefined")
    rho = cov.get(i, j) / math.sqrt(vi * vj)
    if abs(rho) > 1.0:
        if abs(rho) - 1.0 > _CLAMP_SLACK:
            raise ContractError(f"correlation {rho!r} outside [-1, 1]; matrix is not PSD")
        rho = math.copysign(1.0, rho)
    return rho
