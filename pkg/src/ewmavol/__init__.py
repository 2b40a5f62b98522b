"""EWMA variance-covariance forecasting with lambda-grid backtesting."""

__version__ = "0.1.0"

from ._backend import available_backends, default_backend_name
from .backtest import (
    DEFAULT_GRID,
    BacktestConfig,
    BacktestSurface,
    LambdaGrid,
    StrategyLossSeries,
    adaptive_strategy_losses,
    fixed_strategy_losses,
    mse_curve,
    optimal_lambda_full,
    optimal_lambda_path,
    run_grid_backtest,
    squared_error,
)
from .ewma import (
    TruncationPolicy,
    cutoff_lags,
    equal_weight_covariance,
    ewma_covariance_truncated,
    ewma_update,
    scale_to_horizon,
)
from .ingest import PricePanel, ReturnPanel, compute_log_returns, load_price_panel
from .realized import (
    CovarianceMatrix,
    realized_correlation,
    realized_covariance,
    realized_volatility,
)
from .stats import DMReport, dm_test
