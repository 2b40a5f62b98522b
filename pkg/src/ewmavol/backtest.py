"""Rolling-window out-of-sample evaluation of EWMA forecasts over a lambda grid.

At every anchor ``t`` the forecast uses returns up to and including ``t``
and is scored against the realized covariance of rows ``t+1 .. t+T``.
Anchors step one row at a time, so evaluation windows overlap.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _backend
from .errors import (
    AlignmentError,
    ContractError,
    EmptyEvaluationError,
    InsufficientAnchorsError,
    UnknownLambdaError,
)
from .ewma import TruncationPolicy, check_lambda
from .ingest import DateRange, ReturnPanel, _as_day
from .realized import CovarianceMatrix

logger = logging.getLogger(__name__)

_GRID_MATCH = 1e-9


@dataclass(frozen=True)
class LambdaGrid:
    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("lambda grid is empty")
        for v in values:
            check_lambda(v)
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("lambda grid must be strictly increasing")
        object.__setattr__(self, "values", values)

    @classmethod
    def arange(cls, start: float = 0.01, stop: float = 0.99, step: float = 0.01) -> "LambdaGrid":
        """Inclusive arithmetic grid, rounded to 12 decimals to shed float drift."""
        if step <= 0:
            raise ValueError("grid step must be positive")
        if stop < start:
            raise ValueError("grid max is below grid min")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return cls(tuple(round(start + k * step, 12) for k in range(count)))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def array(self) -> np.ndarray:
        return np.array(self.values)

    def index(self, lam: float) -> int:
        arr = self.array()
        hit = np.flatnonzero(np.abs(arr - float(lam)) <= _GRID_MATCH)
        if not hit.size:
            raise UnknownLambdaError(f"lambda {lam!r} is not on the grid")
        return int(hit[0])


DEFAULT_GRID = LambdaGrid.arange(0.01, 0.99, 0.01)


@dataclass(frozen=True)
class BacktestConfig:
    horizon_days: int = 21
    grid: LambdaGrid = DEFAULT_GRID
    evaluation_range: DateRange = None
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)

    def __post_init__(self):
        if int(self.horizon_days) < 1:
            raise ValueError("horizon_days must be >= 1")

    def lags(self) -> np.ndarray:
        return np.array([self.truncation.lags(lam) for lam in self.grid], dtype=np.intp)


@dataclass(frozen=True, eq=False)
class BacktestSurface:
    """Squared-error losses; rows are anchors (forecast origins), columns grid lambdas."""

    anchors: np.ndarray
    grid: LambdaGrid
    losses: np.ndarray
    horizon_days: int
    n_assets: int
    anchor_rows: Optional[np.ndarray] = None

    def __post_init__(self):
        anchors = np.array(self.anchors, dtype="datetime64[D]")
        losses = np.array(self.losses, dtype=float)
        if losses.shape != (len(anchors), len(self.grid)):
            raise ContractError(
                f"losses shape {losses.shape} != ({len(anchors)}, {len(self.grid)})"
            )
        if not np.all(np.isfinite(losses)) or np.any(losses < 0):
            raise ContractError("losses must be finite and non-negative")
        anchors.setflags(write=False)
        losses.setflags(write=False)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "losses", losses)

    @property
    def n_anchors(self) -> int:
        return len(self.anchors)


@dataclass(frozen=True, eq=False)
class StrategyLossSeries:
    anchors: np.ndarray
    losses: np.ndarray
    label: str

    def __post_init__(self):
        anchors = np.array(self.anchors, dtype="datetime64[D]")
        losses = np.array(self.losses, dtype=float)
        if anchors.shape != losses.shape or losses.ndim != 1:
            raise ContractError("anchors and losses must be 1-D and equally long")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "losses", losses)

    def __len__(self):
        return len(self.losses)

    @property
    def mse(self) -> float:
        return float(np.mean(self.losses))


def squared_error(forecast: CovarianceMatrix, realized: CovarianceMatrix) -> float:
    """Sum of squared differences over the upper triangle, diagonal included."""
    if forecast.kind != "forecast" or realized.kind != "realized":
        raise ContractError("squared_error expects (forecast, realized) matrices")
    if forecast.symbols != realized.symbols:
        raise AlignmentError(f"symbols differ: {forecast.symbols} vs {realized.symbols}")
    if forecast.horizon_days != realized.horizon_days:
        raise AlignmentError(
            f"horizons differ: {forecast.horizon_days} vs {realized.horizon_days}"
        )
    diff = forecast.upper() - realized.upper()
    se = 0.0
    for d in diff:
        se += d * d
    return se


def select_anchors(returns: ReturnPanel, config: BacktestConfig) -> np.ndarray:
    """Row indices of the forecast origins evaluated by :func:`run_grid_backtest`.

    Without an explicit start date the first anchor is the earliest row
    with a full lag window for every grid lambda.
    """
    m = returns.n_dates
    horizon = int(config.horizon_days)
    last = m - 1 - horizon
    rows = np.arange(max(last + 1, 0), dtype=np.intp)
    start, end = config.evaluation_range or (None, None)
    if start is None:
        rows = rows[rows >= int(config.lags().max()) - 1]
    else:
        rows = rows[returns.dates[rows] >= _as_day(start)]
    if end is not None:
        rows = rows[returns.dates[rows] <= _as_day(end)]
    return rows


def run_grid_backtest(
    returns: ReturnPanel,
    config: BacktestConfig = BacktestConfig(),
    *,
    threads: Optional[int] = None,
    backend: Optional[str] = None,
) -> BacktestSurface:
    """Score every (anchor, lambda) pair; see the module docstring for alignment."""
    anchors = select_anchors(returns, config)
    if anchors.size == 0:
        raise EmptyEvaluationError(
            f"no anchor in the evaluation range has {config.horizon_days} future return rows"
        )
    lags = config.lags()
    short = int(np.sum(anchors[:, None] + 1 < lags[None, :]))
    if short:
        logger.warning(
            "%d (anchor, lambda) cells use fewer lags than the truncation cutoff", short
        )
    lambdas = config.grid.array()
    weights = _backend.weight_table(lambdas, int(lags.max()))
    norms = _backend.norm_table(lambdas, weights)
    cross = _backend.cross_products(returns.returns)
    kernels = _backend.resolve(backend)
    threads = _backend.default_threads() if threads is None else max(1, int(threads))

    tic = time.perf_counter()
    losses = kernels.loss_surface(
        cross, anchors, int(config.horizon_days), weights, lags, norms, threads
    )
    logger.info(
        "%s backend: %d anchors x %d lambdas in %.3fs (%d threads)",
        kernels.NAME, len(anchors), len(lambdas), time.perf_counter() - tic, threads,
    )
    return BacktestSurface(
        anchors=returns.dates[anchors],
        grid=config.grid,
        losses=losses,
        horizon_days=int(config.horizon_days),
        n_assets=returns.n_assets,
        anchor_rows=anchors,
    )


def mse_curve(surface: BacktestSurface) -> List[Tuple[float, float]]:
    """Mean squared error per grid lambda, averaged over all anchors."""
    mse = surface.losses.mean(axis=0)
    return [(lam, float(v)) for lam, v in zip(surface.grid.values, mse)]


def optimal_lambda_full(surface: BacktestSurface) -> float:
    """Grid lambda with the lowest MSE; ties go to the smaller lambda."""
    mse = surface.losses.mean(axis=0)
    return surface.grid.values[int(np.argmin(mse))]


def _row_argmin(surface: BacktestSurface) -> np.ndarray:
    # np.argmin keeps the first minimum, i.e. the smallest lambda on ties.
    return np.argmin(surface.losses, axis=1)


def optimal_lambda_path(surface: BacktestSurface) -> List[Tuple[np.datetime64, float]]:
    grid = surface.grid.values
    return [(day, grid[k]) for day, k in zip(surface.anchors, _row_argmin(surface))]


def adaptive_strategy_losses(surface: BacktestSurface) -> StrategyLossSeries:
    """Losses of forecasting each anchor with the previous anchor's best lambda.

    The first anchor has no predecessor and is dropped.
    """
    if surface.n_anchors < 2:
        raise InsufficientAnchorsError(
            f"adaptive strategy needs at least 2 anchors, surface has {surface.n_anchors}"
        )
    picks = _row_argmin(surface)[:-1]
    rows = np.arange(1, surface.n_anchors)
    return StrategyLossSeries(
        anchors=surface.anchors[1:],
        losses=surface.losses[rows, picks],
        label="adaptive",
    )


def fixed_strategy_losses(
    surface: BacktestSurface, lam: float, *, paired: bool = False
) -> StrategyLossSeries:
    """Loss column of one grid lambda.

    With ``paired=True`` the first anchor is dropped so the series aligns
    with :func:`adaptive_strategy_losses`.
    """
    col = surface.grid.index(lam)
    start = 1 if paired else 0
    if paired and surface.n_anchors < 2:
        raise InsufficientAnchorsError("paired comparison needs at least 2 anchors")
    return StrategyLossSeries(
        anchors=surface.anchors[start:],
        losses=surface.losses[start:, col],
        label=f"fixed_lambda={surface.grid.values[col]!r}",
    )


def strategy_mse_by_horizon(surfaces: Sequence[BacktestSurface]) -> List[dict]:
    """Fixed-optimum versus adaptive MSE for several horizons (paired anchors)."""
    rows = []
    for surface in surfaces:
        lam = optimal_lambda_full(surface)
        fixed = fixed_strategy_losses(surface, lam, paired=True)
        adaptive = adaptive_strategy_losses(surface)
        rows.append(
            dict(horizon_days=surface.horizon_days, lambda_fixed=lam,
                 fixed=fixed, adaptive=adaptive)
        )
    return rows
