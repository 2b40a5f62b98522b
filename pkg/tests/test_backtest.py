import numpy as np
import pytest

from ewmavol import ReturnPanel
from ewmavol._backend import available_backends
from ewmavol.backtest import (
    DEFAULT_GRID,
    BacktestConfig,
    BacktestSurface,
    LambdaGrid,
    adaptive_strategy_losses,
    fixed_strategy_losses,
    mse_curve,
    optimal_lambda_full,
    optimal_lambda_path,
    run_grid_backtest,
    select_anchors,
    squared_error,
)
from ewmavol.errors import (
    AlignmentError,
    EmptyEvaluationError,
    InsufficientAnchorsError,
    UnknownLambdaError,
)
from ewmavol.ewma import TruncationPolicy, ewma_covariance_truncated, scale_to_horizon
from ewmavol.realized import CovarianceMatrix, realized_covariance

from conftest import make_returns
from oracles import naive_surface


def cov(values, kind, symbols=("a", "b"), horizon=1):
    return CovarianceMatrix(symbols, horizon, None, np.asarray(values, dtype=float), kind)


def surface(losses, grid, start="2020-01-01"):
    losses = np.asarray(losses, dtype=float)
    anchors = np.datetime64(start) + np.arange(losses.shape[0])
    return BacktestSurface(anchors, LambdaGrid(tuple(grid)), losses, 5, 2)


def test_default_grid():
    assert len(DEFAULT_GRID) == 99
    assert DEFAULT_GRID.values[0] == 0.01 and DEFAULT_GRID.values[-1] == 0.99
    assert DEFAULT_GRID.values[93] == 0.94
    assert LambdaGrid.arange(0.1, 0.9, 0.1).values == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def test_grid_invariants():
    with pytest.raises(ValueError):
        LambdaGrid(())
    with pytest.raises(ValueError):
        LambdaGrid((0.5, 0.4))
    with pytest.raises(ValueError):
        LambdaGrid((0.5, 1.0))


def test_squared_error_examples():
    m = [[1.0, 0.5], [0.5, 2.0]]
    assert squared_error(cov(m, "forecast"), cov(m, "realized")) == 0.0
    shifted = np.array(m) + 0.1
    assert squared_error(cov(shifted, "forecast"), cov(m, "realized")) == pytest.approx(0.03, rel=1e-12)
    one = squared_error(cov([[0.002]], "forecast", ("a",)), cov([[0.001]], "realized", ("a",)))
    assert one == pytest.approx(1e-6, rel=1e-12)


def test_squared_error_term_count():
    a = 22
    f = cov(np.ones((a, a)), "forecast", tuple(f"s{i}" for i in range(a)))
    r = cov(np.zeros((a, a)), "realized", f.symbols)
    assert squared_error(f, r) == 253.0


def test_squared_error_alignment():
    m = [[1.0, 0.0], [0.0, 1.0]]
    with pytest.raises(AlignmentError):
        squared_error(cov(m, "forecast"), cov(m, "realized", ("a", "c")))
    with pytest.raises(AlignmentError):
        squared_error(cov(m, "forecast"), cov(m, "realized", horizon=5))


def test_anchor_selection(rng):
    p = make_returns(rng, 300, 2)
    cfg = BacktestConfig(horizon_days=5, grid=LambdaGrid((0.5, 0.9)))
    rows = select_anchors(p, cfg)
    assert rows[0] == cfg.lags().max() - 1 == 43
    assert rows[-1] == 300 - 1 - 5
    cfg = BacktestConfig(5, LambdaGrid((0.5,)), (p.dates[100], p.dates[109]))
    assert list(select_anchors(p, cfg)) == list(range(100, 110))


def test_minimal_surface(rng):
    p = make_returns(rng, 40, 2)
    cfg = BacktestConfig(3, LambdaGrid((0.7,)), (p.dates[20], p.dates[20]))
    s = run_grid_backtest(p, cfg)
    assert s.losses.shape == (1, 1)
    fc = scale_to_horizon(ewma_covariance_truncated(p, 20, 0.7), 3)
    real = realized_covariance(p, 23, 3)
    assert s.losses[0, 0] == pytest.approx(squared_error(fc, real), rel=1e-13)
    assert s.anchors[0] == p.dates[20]


def test_zero_returns_zero_losses(rng):
    p = make_returns(rng, 120, 3)
    zero = ReturnPanel(p.dates, p.symbols, np.zeros_like(p.returns))
    s = run_grid_backtest(zero, BacktestConfig(5, LambdaGrid.arange(0.1, 0.9, 0.2)))
    assert np.all(s.losses == 0)


@pytest.mark.parametrize("backend", available_backends())
def test_surface_matches_naive(rng, backend):
    p = make_returns(rng, 120, 3, scale=0.015)
    grid = (0.5, 0.9)
    cfg = BacktestConfig(5, LambdaGrid(grid), (p.dates[60], p.dates[109]))
    s = run_grid_backtest(p, cfg, backend=backend, threads=1)
    assert s.n_anchors == 50
    expect = naive_surface(p.returns.tolist(), list(range(60, 110)), grid, 5, 0.01)
    np.testing.assert_allclose(s.losses, expect, rtol=0, atol=1e-12)


def test_history_limited_anchors_match_naive(rng):
    p = make_returns(rng, 60, 2)
    cfg = BacktestConfig(4, LambdaGrid((0.3, 0.95)), (p.dates[0], p.dates[30]))
    s = run_grid_backtest(p, cfg)
    expect = naive_surface(p.returns.tolist(), list(range(0, 31)), (0.3, 0.95), 4, 0.01)
    np.testing.assert_allclose(s.losses, expect, rtol=0, atol=1e-12)


def test_backends_agree(rng):
    if len(available_backends()) < 2:
        pytest.skip("compiled kernels not built")
    p = make_returns(rng, 700, 6)
    cfg = BacktestConfig(10)
    a = run_grid_backtest(p, cfg, backend="cython", threads=1).losses
    b = run_grid_backtest(p, cfg, backend="python", threads=1).losses
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


@pytest.mark.parametrize("backend", available_backends())
def test_thread_count_does_not_change_bits(rng, backend):
    p = make_returns(rng, 1400, 4)
    cfg = BacktestConfig(21, LambdaGrid.arange(0.05, 0.95, 0.05))
    one = run_grid_backtest(p, cfg, backend=backend, threads=1).losses
    many = run_grid_backtest(p, cfg, backend=backend, threads=4).losses
    assert one.tobytes() == many.tobytes()


def test_empty_evaluation(rng):
    p = make_returns(rng, 30, 2)
    with pytest.raises(EmptyEvaluationError):
        run_grid_backtest(p, BacktestConfig(21))


def test_mse_curve():
    s = surface([[0.01, 0.5]], (0.2, 0.4))
    assert mse_curve(s) == [(0.2, 0.01), (0.4, 0.5)]
    s = surface([[0.01, 0.0], [0.03, 0.0]], (0.2, 0.4))
    assert mse_curve(s)[0][1] == pytest.approx(0.02, rel=1e-15)


def test_optimal_full_dominance_and_ties():
    assert optimal_lambda_full(surface([[3, 1, 2], [5, 0.5, 9]], (0.1, 0.5, 0.9))) == 0.5
    assert optimal_lambda_full(surface([[1, 2, 1], [2, 1, 2]], (0.1, 0.5, 0.9))) == 0.1


def test_optimal_path_examples(rng):
    s = surface([[0.5, 0.2, 0.9]], (0.3, 0.6, 0.9))
    assert optimal_lambda_path(s)[0][1] == 0.6
    assert optimal_lambda_path(surface([[7.0]], (0.4,)))[0][1] == 0.4

    losses = rng.random((20, 99))
    losses[3, 10] = losses[3, 40] = 0.0  # exact tie: the smaller lambda must win
    s = BacktestSurface(np.datetime64("2020-01-01") + np.arange(20), DEFAULT_GRID, losses, 5, 2)
    got = [lam for _, lam in optimal_lambda_path(s)]
    for row, lam in zip(losses, got):
        best = 0
        for k in range(1, 99):
            if row[k] < row[best]:
                best = k
        assert lam == DEFAULT_GRID.values[best]


def test_adaptive_constant_selection():
    s = surface([[0.1, 0.5], [0.2, 0.6], [0.3, 0.7]], (0.3, 0.6))
    series = adaptive_strategy_losses(s)
    np.testing.assert_array_equal(series.losses, [0.2, 0.3])
    np.testing.assert_array_equal(series.anchors, s.anchors[1:])


def test_adaptive_two_pass_oracle(rng):
    losses = rng.random((30, 7))
    s = surface(losses, (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7))
    picks = [min(range(7), key=lambda k: (row[k], k)) for row in losses.tolist()]
    expect = [losses[t][picks[t - 1]] for t in range(1, 30)]
    assert adaptive_strategy_losses(s).losses.tolist() == expect


def test_adaptive_needs_two_anchors():
    with pytest.raises(InsufficientAnchorsError):
        adaptive_strategy_losses(surface([[1.0, 2.0]], (0.2, 0.4)))


def test_fixed_strategy():
    s = surface([[0.1], [0.2]], (0.5,))
    np.testing.assert_array_equal(fixed_strategy_losses(s, 0.5).losses, [0.1, 0.2])
    np.testing.assert_array_equal(fixed_strategy_losses(s, 0.5, paired=True).losses, [0.2])
    with pytest.raises(UnknownLambdaError):
        fixed_strategy_losses(s, 0.55)


def test_surface_invariants(rng):
    p = make_returns(rng, 600, 3)
    s = run_grid_backtest(p, BacktestConfig(5, LambdaGrid.arange(0.1, 0.95, 0.05)))
    curve = mse_curve(s)
    lam = optimal_lambda_full(s)
    assert min(m for _, m in curve) == dict(curve)[lam]

    path = optimal_lambda_path(s)
    for row, (_, best) in zip(s.losses, path):
        assert row[s.grid.index(best)] <= row.min()

    adaptive = adaptive_strategy_losses(s)
    assert adaptive.mse >= s.losses[1:].min(axis=1).mean()

    transformed = BacktestSurface(s.anchors, s.grid, np.log1p(s.losses) ** 3, 5, 3)
    assert optimal_lambda_path(transformed) == path
