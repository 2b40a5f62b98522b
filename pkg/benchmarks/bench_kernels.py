"""Compare the compiled and pure-numpy sweep kernels.

    python3 benchmarks/bench_kernels.py                # full-size sweep
    python3 benchmarks/bench_kernels.py --days 1500 --assets 8 --repeat 3

Runs the full lambda-grid backtest through each available backend on the same
synthetic panel, reports the best wall time and checks that the surfaces agree.
"""

import argparse
import time

import numpy as np
import pandas as pd

from ewmavol import ReturnPanel
from ewmavol._backend import available_backends, default_threads
from ewmavol.backtest import BacktestConfig, LambdaGrid, run_grid_backtest


def synthetic_panel(n_days, n_assets, seed):
    rng = np.random.default_rng(seed)
    dates = pd.bdate_range("1994-01-03", periods=n_days).to_numpy().astype("datetime64[D]")
    mix = rng.standard_normal((n_assets, n_assets)) / np.sqrt(n_assets)
    returns = rng.standard_normal((n_days, n_assets)) @ mix.T * 0.01
    return ReturnPanel(dates, [f"S{i:02d}" for i in range(n_assets)], returns)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--days", type=int, default=6800)
    ap.add_argument("--assets", type=int, default=22)
    ap.add_argument("--horizon", type=int, default=21)
    ap.add_argument("--grid-step", type=float, default=0.01)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--repeat", type=int, default=1)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)

    panel = synthetic_panel(args.days, args.assets, args.seed)
    config = BacktestConfig(args.horizon, LambdaGrid.arange(args.grid_step, 0.99, args.grid_step))
    threads = args.threads or default_threads()
    print(f"panel {args.days} days x {args.assets} assets, {len(config.grid)} lambdas, "
          f"T={args.horizon}, {threads} thread(s)")

    results = {}
    for name in available_backends():
        best = float("inf")
        for _ in range(args.repeat):
            start = time.perf_counter()
            surface = run_grid_backtest(panel, config, threads=threads, backend=name)
            best = min(best, time.perf_counter() - start)
        results[name] = (best, surface.losses)
        print(f"{name:>8}: {best:8.3f} s  ({surface.losses.shape[0]} anchors)")

    if len(results) < 2:
        print("compiled kernels not built; only the numpy fallback was timed")
        return
    (t_c, a), (t_p, b) = results["cython"], results["python"]
    print(f"speedup: {t_p / t_c:.1f}x")
    print(f"bitwise identical: {a.tobytes() == b.tobytes()}, max abs diff: {np.abs(a - b).max():.3e}")


if __name__ == "__main__":
    main()
