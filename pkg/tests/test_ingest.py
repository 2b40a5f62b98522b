import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ewmavol.errors import (
    EmptyPanelError,
    InsufficientDataError,
    MissingSymbolError,
    PriceValidationError,
)
from ewmavol.ingest import (
    PricePanel,
    compute_log_returns,
    load_price_panel,
    read_return_panel,
    write_return_panel,
)

# ln(110/100) and ln(99/110), evaluated with mpmath at 40 digits.
LN_1_1 = 0.09531017980432486004
LN_0_9 = -0.10536051565782630123

WIDE = """date,AAA,BBB
2020-01-02,100,50
2020-01-03,110,51
2020-01-06,99,52
"""

LONG = """date,symbol,adjusted_close
2020-01-02,A,10
2020-01-03,A,11
2020-01-06,A,12
2020-01-03,B,20
2020-01-06,B,21
2020-01-07,B,22
"""


def panel_from(prices, start="2020-01-01"):
    prices = np.asarray(prices, dtype=float).reshape(len(prices), -1)
    dates = np.datetime64(start) + np.arange(len(prices))
    return PricePanel(dates, [f"S{i}" for i in range(prices.shape[1])], prices)


def test_wide_form_identity():
    panel = load_price_panel(io.StringIO(WIDE))
    assert panel.symbols == ("AAA", "BBB")
    assert panel.prices.shape == (3, 2)
    assert panel.prices[1, 0] == 110.0
    assert str(panel.dates[0]) == "2020-01-02"


def test_long_form_inner_join():
    panel = load_price_panel(io.StringIO(LONG))
    assert [str(d) for d in panel.dates] == ["2020-01-03", "2020-01-06"]
    np.testing.assert_array_equal(panel.prices, [[11, 20], [12, 21]])


def test_symbol_order_follows_request():
    panel = load_price_panel(io.StringIO(WIDE), symbols=["BBB", "AAA"])
    assert panel.symbols == ("BBB", "AAA")
    assert panel.prices[0, 0] == 50.0


def test_date_range_is_closed():
    panel = load_price_panel(io.StringIO(WIDE), date_range=("2020-01-03", "2020-01-06"))
    assert len(panel.dates) == 2
    panel = load_price_panel(io.StringIO(WIDE), date_range=(None, "2020-01-02"))
    assert len(panel.dates) == 1


def test_wide_blank_cell_dropped_by_join():
    text = "date,X,Y\n2020-01-02,1,2\n2020-01-03,,3\n2020-01-06,4,5\n"
    panel = load_price_panel(io.StringIO(text))
    assert len(panel.dates) == 2


def test_unsorted_input_is_sorted():
    text = "date,X\n2020-01-06,3\n2020-01-02,1\n2020-01-03,2\n"
    panel = load_price_panel(io.StringIO(text))
    np.testing.assert_array_equal(panel.prices[:, 0], [1, 2, 3])


def test_missing_symbol_named():
    with pytest.raises(MissingSymbolError, match="ZZZ"):
        load_price_panel(io.StringIO(WIDE), symbols=["AAA", "ZZZ"])
    with pytest.raises(MissingSymbolError, match="Q"):
        load_price_panel(io.StringIO(LONG), symbols=["Q"])


@pytest.mark.parametrize("bad", ["0", "-3", "abc", "inf"])
def test_bad_price_names_row_and_column(bad):
    text = f"date,AAA,BBB\n2020-01-02,100,50\n2020-01-03,110,{bad}\n"
    with pytest.raises(PriceValidationError) as info:
        load_price_panel(io.StringIO(text))
    assert info.value.line == 3
    assert info.value.column == "BBB"
    assert info.value.date == "2020-01-03"


def test_long_form_bad_price_line_number():
    text = LONG.replace("2020-01-06,B,21", "2020-01-06,B,0")
    with pytest.raises(PriceValidationError) as info:
        load_price_panel(io.StringIO(text))
    assert info.value.line == 6 and info.value.column == "B"


def test_long_form_duplicate_rejected():
    text = LONG + "2020-01-03,A,11.5\n"
    with pytest.raises(PriceValidationError, match="duplicate"):
        load_price_panel(io.StringIO(text))


def test_bad_date_rejected():
    with pytest.raises(PriceValidationError, match="date"):
        load_price_panel(io.StringIO("date,X\n2020/01/02,1\n"))


def test_empty_intersection():
    text = "date,symbol,adjusted_close\n2020-01-02,A,1\n2020-01-03,B,2\n"
    with pytest.raises(EmptyPanelError):
        load_price_panel(io.StringIO(text))


def test_constant_price_zero_return():
    ret = compute_log_returns(panel_from([100, 100]))
    assert ret.returns[0, 0] == 0.0


def test_log_return_values():
    ret = compute_log_returns(panel_from([100, 110, 99]))
    assert ret.returns[:, 0] == pytest.approx([LN_1_1, LN_0_9], rel=1e-15)
    assert ret.dates[0] == np.datetime64("2020-01-02")


def test_single_date_insufficient():
    with pytest.raises(InsufficientDataError):
        compute_log_returns(panel_from([100]))


positive_prices = st.lists(
    st.floats(min_value=1e-2, max_value=1e4, allow_nan=False), min_size=2, max_size=60
)


@settings(max_examples=60, deadline=None)
@given(positive_prices)
def test_round_trip_cumulative_returns(prices):
    ret = compute_log_returns(panel_from(prices))
    rebuilt = prices[0] * np.exp(np.cumsum(ret.returns[:, 0]))
    np.testing.assert_allclose(rebuilt, prices[1:], rtol=1e-10, atol=0)
    assert ret.n_dates == len(prices) - 1


@settings(max_examples=60, deadline=None)
@given(positive_prices, st.floats(min_value=1e-3, max_value=1e3))
def test_scale_invariance(prices, c):
    base = compute_log_returns(panel_from(prices)).returns
    scaled = compute_log_returns(panel_from(np.asarray(prices) * c)).returns
    np.testing.assert_allclose(scaled, base, rtol=0, atol=1e-15 * max(1.0, np.abs(base).max()) * 4)


def test_return_file_round_trip(tmp_path, rng):
    prices = np.exp(np.cumsum(rng.standard_normal((40, 3)) * 0.02, axis=0)) * 100
    ret = compute_log_returns(panel_from(prices))
    path = tmp_path / "r.csv"
    write_return_panel(ret, path)
    back = read_return_panel(path)
    assert back.symbols == ret.symbols
    np.testing.assert_array_equal(back.dates, ret.dates)
    assert np.array_equal(back.returns, ret.returns)


def test_panel_invariants_enforced():
    with pytest.raises(ValueError):
        PricePanel(np.array(["2020-01-02", "2020-01-02"], dtype="datetime64[D]"), ["X"], [[1.0], [2.0]])
    with pytest.raises(PriceValidationError):
        panel_from([1.0, math.nan])
