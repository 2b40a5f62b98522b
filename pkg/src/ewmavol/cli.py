"""Command-line driver: ``ewmavol {returns,backtest,dm}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from . import _backend
from .backtest import (
    BacktestConfig,
    LambdaGrid,
    adaptive_strategy_losses,
    fixed_strategy_losses,
    mse_curve,
    optimal_lambda_full,
    optimal_lambda_path,
    run_grid_backtest,
)
from .errors import DegenerateVarianceError, EwmaVolError
from .ewma import DEFAULT_TOLERANCE, TruncationPolicy
from .ingest import compute_log_returns, load_price_panel, write_return_panel
from .report import (
    RunManifest,
    emit_comparison_table,
    emit_lambda_path,
    emit_mse_curve,
    emit_surface,
    fmt_float,
    read_loss_series,
)
from .stats import default_lag_window, dm_test

EXIT_ERROR = 2

OUTPUT_FILES = {
    "surface": "surface.csv",
    "curve": "mse_curve.csv",
    "path": "lambda_path.csv",
    "comparison": "comparison.csv",
}


def _integer(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"expected a whole number, got {text!r}")
    return int(value)


def _positive_int(text: str) -> int:
    value = _integer(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a value >= 1, got {text!r}")
    return value


def _non_negative_int(text: str) -> int:
    value = _integer(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a value >= 0, got {text!r}")
    return value


def _symbols(text: str):
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty symbol list")
    return items


def _add_panel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="price CSV (long or wide form)")
    p.add_argument("--symbols", type=_symbols, default=None,
                   help="comma-separated symbols, in output order (default: all)")
    p.add_argument("--from", dest="date_from", default=None, metavar="YYYY-MM-DD",
                   help="first date (inclusive)")
    p.add_argument("--to", dest="date_to", default=None, metavar="YYYY-MM-DD",
                   help="last date (inclusive)")
    p.add_argument("--out-dir", default=".", help="directory for output files (default: .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewmavol",
        description="EWMA covariance forecasting, lambda-grid backtests and Diebold-Mariano tests.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress to stderr (repeat for debug output)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{returns,backtest,dm}")

    p = sub.add_parser("returns", help="write the log-return panel of a price file (wide form)")
    _add_panel_flags(p)

    p = sub.add_parser(
        "backtest",
        help="rolling out-of-sample backtest over a lambda grid",
        description="Writes surface.csv, mse_curve.csv, lambda_path.csv and comparison.csv. "
        "--from/--to bound the forecast origins; earlier rows still feed the EWMA lags.",
    )
    _add_panel_flags(p)
    p.add_argument("--horizon", type=_positive_int, default=21,
                   help="forecast horizon T in trading days (default: 21)")
    p.add_argument("--grid-min", type=float, default=0.01, help="smallest lambda (default: 0.01)")
    p.add_argument("--grid-max", type=float, default=0.99, help="largest lambda (default: 0.99)")
    p.add_argument("--grid-step", type=float, default=0.01, help="lambda spacing (default: 0.01)")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE,
                   help="discarded EWMA weight tolerance (default: 0.01)")
    p.add_argument("--max-lags", type=_positive_int, default=None,
                   help="optional cap on the number of EWMA lags")
    p.add_argument("--dm-lags", type=_non_negative_int, default=None,
                   help="Diebold-Mariano lag window (default: horizon - 1)")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads for the sweep (default: all cores; 1 = serial)")

    p = sub.add_parser(
        "dm",
        help="Diebold-Mariano test between two loss series",
        description="Each series is FILE or FILE:COLUMN, where FILE has a leading date column. "
        "A positive statistic means the second series has lower losses.",
    )
    p.add_argument("losses_a", help="first loss series")
    p.add_argument("losses_b", help="second loss series")
    p.add_argument("--dm-lags", type=_non_negative_int, default=0,
                   help="autocovariance lags in the long-run variance (default: 0)")
    return parser


def _split_series(spec: str):
    if os.path.exists(spec) or ":" not in spec:
        return spec, None
    path, column = spec.rsplit(":", 1)
    return path, column or None


def cmd_returns(args) -> int:
    prices = load_price_panel(args.input, args.symbols, (args.date_from, args.date_to))
    returns = compute_log_returns(prices)
    os.makedirs(args.out_dir, exist_ok=True)
    out = os.path.join(args.out_dir, "returns.csv")
    write_return_panel(returns, out)
    print(f"wrote {returns.n_dates} rows x {returns.n_assets} assets to {out}")
    return 0


def cmd_backtest(args) -> int:
    prices = load_price_panel(args.input, args.symbols)
    returns = compute_log_returns(prices)
    config = BacktestConfig(
        horizon_days=args.horizon,
        grid=LambdaGrid.arange(args.grid_min, args.grid_max, args.grid_step),
        evaluation_range=(args.date_from, args.date_to),
        truncation=TruncationPolicy(args.tolerance, args.max_lags),
    )
    if args.date_from is None and args.date_to is None:
        config = BacktestConfig(config.horizon_days, config.grid, None, config.truncation)

    surface = run_grid_backtest(returns, config, threads=args.threads)
    curve = mse_curve(surface)
    lam_star = optimal_lambda_full(surface)
    path = optimal_lambda_path(surface)
    adaptive = adaptive_strategy_losses(surface)
    fixed = fixed_strategy_losses(surface, lam_star, paired=True)
    lags = args.dm_lags if args.dm_lags is not None else default_lag_window(args.horizon, len(fixed))
    try:
        dm = dm_test(fixed, adaptive, lags)
    except DegenerateVarianceError:
        dm = None

    manifest = RunManifest.build(config, returns, backend=_backend.default_backend_name(),
                                 source=args.input)
    os.makedirs(args.out_dir, exist_ok=True)
    out = {k: os.path.join(args.out_dir, v) for k, v in OUTPUT_FILES.items()}
    emit_surface(surface, out["surface"], manifest)
    emit_mse_curve(curve, out["curve"], manifest)
    emit_lambda_path(path, out["path"], manifest)
    emit_comparison_table(fixed, adaptive, dm, out["comparison"], manifest, lag_window=lags)

    full_mse = dict(curve)[lam_star]
    print(f"horizon_days: {surface.horizon_days}")
    print(f"anchors: {surface.n_anchors}")
    print(f"lambda_opt: {lam_star!r}")
    print(f"mse_fixed_full_sample: {fmt_float(full_mse)}")
    print(f"mse_fixed: {fmt_float(fixed.mse)}")
    print(f"mse_adaptive: {fmt_float(adaptive.mse)}")
    if dm is None:
        print("dm_statistic: nan (degenerate: identical strategies)")
        print("p_value: nan")
    else:
        print(f"dm_statistic: {fmt_float(dm.statistic)}")
        print(f"p_value: {fmt_float(dm.p_value)}")
    print(f"dm_n: {len(fixed)}")
    print(f"dm_lag_window: {lags}")
    return 0


def cmd_dm(args) -> int:
    a = read_loss_series(*_split_series(args.losses_a))
    b = read_loss_series(*_split_series(args.losses_b))
    report = dm_test(a, b, args.dm_lags)
    print(f"dm_statistic: {fmt_float(report.statistic)}")
    print(f"p_value: {fmt_float(report.p_value)}")
    print(f"n: {report.n}")
    print(f"lag_window: {report.lag_window}")
    print(f"mean_differential: {fmt_float(report.mean_differential)}")
    print(f"long_run_variance: {fmt_float(report.long_run_variance)}")
    return 0


COMMANDS = {"returns": cmd_returns, "backtest": cmd_backtest, "dm": cmd_dm}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (EwmaVolError, ValueError, KeyError, OSError) as exc:
        print(f"ewmavol: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
