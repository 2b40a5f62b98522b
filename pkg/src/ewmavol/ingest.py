"""Price panel loading, validation and log-return transformation.

Two CSV layouts are accepted:

* long form, headers ``date,symbol,adjusted_close``
* wide form, headers ``date,<SYM1>,<SYM2>,...``

Both normalize to a :class:`PricePanel` holding the inner join of the
requested per-asset histories. Missing cells are never imputed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from os import PathLike
from typing import IO, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import (
    EmptyPanelError,
    InsufficientDataError,
    MissingSymbolError,
    PriceValidationError,
)

logger = logging.getLogger(__name__)

Source = Union[str, PathLike, IO[str]]
DateLike = Union[str, np.datetime64, "pd.Timestamp", None]
DateRange = Optional[Tuple[DateLike, DateLike]]

LONG_COLUMNS = ("date", "symbol", "adjusted_close")


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def _as_day(value) -> np.datetime64:
    return np.datetime64(pd.Timestamp(value).date(), "D")


@dataclass(frozen=True, eq=False)
class PricePanel:
    """Date-aligned adjusted closing prices; rows are dates, columns symbols."""

    dates: np.ndarray
    symbols: Tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        dates = _readonly(np.asarray(self.dates, dtype="datetime64[D]"))
        prices = _readonly(np.asarray(self.prices, dtype=float))
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "prices", prices)
        if prices.shape != (len(dates), len(self.symbols)):
            raise ValueError(
                f"prices shape {prices.shape} does not match "
                f"{len(dates)} dates x {len(self.symbols)} symbols"
            )
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("duplicate symbols")
        if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
            raise ValueError("dates must be strictly increasing")
        bad = ~(np.isfinite(prices) & (prices > 0))
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise PriceValidationError(
                f"price {prices[row, col]!r} is not strictly positive and finite",
                date=str(dates[row]),
                column=self.symbols[col],
            )

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    def column(self, symbol: str) -> np.ndarray:
        return self.prices[:, self.symbols.index(symbol)]


@dataclass(frozen=True, eq=False)
class ReturnPanel:
    """Daily log returns; ``returns[t]`` is realized on ``dates[t]``."""

    dates: np.ndarray
    symbols: Tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        dates = _readonly(np.asarray(self.dates, dtype="datetime64[D]"))
        returns = _readonly(np.ascontiguousarray(self.returns, dtype=float))
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "returns", returns)
        if returns.ndim != 2 or returns.shape != (len(dates), len(self.symbols)):
            raise ValueError(
                f"returns shape {returns.shape} does not match "
                f"{len(dates)} dates x {len(self.symbols)} symbols"
            )
        if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(returns)):
            raise ValueError("returns must be finite")

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def n_assets(self) -> int:
        return len(self.symbols)

    def column(self, symbol: str) -> np.ndarray:
        return self.returns[:, self.symbol_index(symbol)]

    def symbol_index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise MissingSymbolError([symbol]) from None

    def date_index(self, date) -> int:
        """Position of ``date`` in the panel (exact match required)."""
        day = _as_day(date)
        pos = int(np.searchsorted(self.dates, day))
        if pos >= len(self.dates) or self.dates[pos] != day:
            raise KeyError(f"date {day} not in return panel")
        return pos


def _read_csv(source: Source) -> pd.DataFrame:
    frame = pd.read_csv(
        source, dtype=str, keep_default_na=False, skipinitialspace=True
    )
    frame.columns = [str(c).strip() for c in frame.columns]
    if not len(frame.columns) or frame.columns[0].lower() != "date":
        raise PriceValidationError("first header column must be 'date'", line=1)
    return frame


def _parse_dates(raw: pd.Series) -> np.ndarray:
    parsed = pd.to_datetime(raw.str.strip(), format="%Y-%m-%d", errors="coerce")
    bad = np.flatnonzero(parsed.isna().to_numpy())
    if bad.size:
        i = int(bad[0])
        raise PriceValidationError(
            f"unparseable ISO-8601 date {raw.iloc[i]!r}", line=i + 2, column="date"
        )
    return parsed.to_numpy().astype("datetime64[D]")


def _to_float(text: str) -> float:
    if "_" in text:  # float() would accept digit grouping like 1_000
        return np.nan
    try:
        return float(text)
    except ValueError:
        return np.nan


def _parse_numbers(raw: pd.Series, *, allow_blank: bool, column, dates, lines) -> np.ndarray:
    """Coerce strings to floats; blanks become NaN when ``allow_blank``.

    ``column`` is a label or a per-row array of labels (long form).
    """
    text = raw.str.strip()
    # float() is correctly rounded; pandas' fast parser is not bit-exact.
    values = np.array([_to_float(s) for s in text], dtype=float)
    blank = (text == "").to_numpy()
    bad = np.isnan(values) & ~blank
    if not allow_blank:
        bad |= blank
    idx = np.flatnonzero(bad)
    if idx.size:
        i = int(idx[0])
        label = column if isinstance(column, str) else str(column[i])
        raise PriceValidationError(
            f"non-numeric value {raw.iloc[i]!r}",
            line=int(lines[i]), column=label, date=str(dates[i]),
        )
    values[blank] = np.nan
    return values


def _check_positive(values: np.ndarray, lines: np.ndarray, dates, column: str) -> None:
    present = ~np.isnan(values)
    bad = np.flatnonzero(present & ~(np.isfinite(values) & (values > 0)))
    if bad.size:
        i = int(bad[0])
        raise PriceValidationError(
            f"price {values[i]!r} is not strictly positive and finite",
            line=int(lines[i]), column=column, date=str(dates[i]),
        )


def _in_range(dates: np.ndarray, date_range: DateRange) -> np.ndarray:
    keep = np.ones(len(dates), dtype=bool)
    if date_range is None:
        return keep
    start, end = date_range
    if start is not None:
        keep &= dates >= _as_day(start)
    if end is not None:
        keep &= dates <= _as_day(end)
    return keep


def _wide_frame(frame: pd.DataFrame, symbols, date_range) -> Tuple[np.ndarray, list, np.ndarray]:
    available = list(frame.columns[1:])
    if symbols is None:
        symbols = available
    missing = [s for s in symbols if s not in available]
    if missing:
        raise MissingSymbolError(missing)
    dates = _parse_dates(frame.iloc[:, 0])
    lines = np.arange(len(frame)) + 2
    order = np.argsort(dates, kind="stable")
    dup = np.flatnonzero(dates[order][1:] == dates[order][:-1])
    if dup.size:
        i = int(order[dup[0] + 1])
        raise PriceValidationError("duplicate date", line=int(lines[i]), date=str(dates[i]))

    keep = _in_range(dates, date_range)
    dates, lines = dates[keep], lines[keep]
    columns = []
    for sym in symbols:
        raw = frame[sym][keep]
        values = _parse_numbers(raw, allow_blank=True, column=sym, dates=dates, lines=lines)
        _check_positive(values, lines, dates, sym)
        columns.append(values)
    matrix = np.column_stack(columns) if columns else np.empty((len(dates), 0))
    order = np.argsort(dates, kind="stable")
    return dates[order], list(symbols), matrix[order]


def _long_frame(frame: pd.DataFrame, symbols, date_range) -> Tuple[np.ndarray, list, np.ndarray]:
    lower = {c.lower(): c for c in frame.columns}
    date_col, sym_col, px_col = (lower[c] for c in LONG_COLUMNS)
    sym = frame[sym_col].str.strip().to_numpy()
    available = list(dict.fromkeys(sym))
    if symbols is None:
        symbols = available
    missing = [s for s in symbols if s not in set(available)]
    if missing:
        raise MissingSymbolError(missing)

    dates = _parse_dates(frame[date_col])
    lines = np.arange(len(frame)) + 2
    keep = _in_range(dates, date_range) & np.isin(sym, list(symbols))
    dates, sym, lines = dates[keep], sym[keep], lines[keep]
    values = _parse_numbers(
        frame[px_col][keep], allow_blank=False, column=sym, dates=dates, lines=lines
    )
    _check_positive_long(values, lines, dates, sym)

    pairs = pd.DataFrame({"date": dates, "symbol": sym, "px": values, "line": lines})
    dup = pairs.duplicated(["date", "symbol"], keep="first").to_numpy()
    if dup.any():
        i = int(np.flatnonzero(dup)[0])
        raise PriceValidationError(
            "duplicate (date, symbol) row", line=int(lines[i]), column=sym[i], date=str(dates[i])
        )
    wide = pairs.pivot(index="date", columns="symbol", values="px").reindex(columns=list(symbols))
    wide = wide.sort_index()
    return wide.index.to_numpy().astype("datetime64[D]"), list(symbols), wide.to_numpy(dtype=float)


def _check_positive_long(values, lines, dates, sym) -> None:
    bad = np.flatnonzero(~(np.isfinite(values) & (values > 0)))
    if bad.size:
        i = int(bad[0])
        raise PriceValidationError(
            f"price {values[i]!r} is not strictly positive and finite",
            line=int(lines[i]), column=str(sym[i]), date=str(dates[i]),
        )


def load_price_panel(
    source: Source,
    symbols: Optional[Sequence[str]] = None,
    date_range: DateRange = None,
) -> PricePanel:
    """Load a long- or wide-form price CSV into an inner-joined :class:`PricePanel`.

    Parameters
    ----------
    source : path or text buffer
    symbols : sequence of str, optional
        Requested assets, in output column order. Defaults to every asset
        in the file (file order).
    date_range : (start, end), optional
        Closed interval; either end may be ``None``.
    """
    frame = _read_csv(source)
    lowered = {c.lower() for c in frame.columns}
    if symbols is not None:
        symbols = list(dict.fromkeys(symbols))
    if {"symbol", "adjusted_close"} <= lowered:
        dates, symbols, matrix = _long_frame(frame, symbols, date_range)
    else:
        dates, symbols, matrix = _wide_frame(frame, symbols, date_range)

    complete = ~np.isnan(matrix).any(axis=1)
    dropped = int((~complete).sum())
    if dropped:
        logger.info("inner join dropped %d date(s) lacking a price for every symbol", dropped)
    dates, matrix = dates[complete], matrix[complete]
    if len(dates) == 0 or not symbols:
        raise EmptyPanelError("no dates shared by all requested symbols in the date range")
    return PricePanel(dates=dates, symbols=tuple(symbols), prices=matrix)


def compute_log_returns(panel: PricePanel) -> ReturnPanel:
    """``returns[t] = ln(prices[t+1] / prices[t])``, dated at the later price."""
    if panel.n_dates < 2:
        raise InsufficientDataError(
            "log returns need at least two price dates", required=2, available=panel.n_dates
        )
    prices = panel.prices
    returns = np.log(prices[1:] / prices[:-1])
    return ReturnPanel(dates=panel.dates[1:], symbols=panel.symbols, returns=returns)


def write_return_panel(panel: ReturnPanel, destination: Union[str, PathLike]) -> None:
    """Write a wide-form return CSV with shortest round-trip float encoding."""
    with open(destination, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(("date",) + panel.symbols) + "\n")
        for day, row in zip(panel.dates, panel.returns):
            fh.write(str(day) + "," + ",".join(repr(float(x)) for x in row) + "\n")


def read_return_panel(source: Source, symbols: Optional[Iterable[str]] = None) -> ReturnPanel:
    """Read a wide-form return CSV as written by :func:`write_return_panel`."""
    frame = _read_csv(source)
    available = list(frame.columns[1:])
    symbols = available if symbols is None else list(symbols)
    missing = [s for s in symbols if s not in available]
    if missing:
        raise MissingSymbolError(missing)
    dates = _parse_dates(frame.iloc[:, 0])
    lines = np.arange(len(frame)) + 2
    cols = [
        _parse_numbers(frame[s], allow_blank=False, column=s, dates=dates, lines=lines)
        for s in symbols
    ]
    matrix = np.column_stack(cols) if cols else np.empty((len(dates), 0))
    if not np.all(np.isfinite(matrix)):
        row, col = np.argwhere(~np.isfinite(matrix))[0]
        raise PriceValidationError(
            "non-finite return", line=int(row) + 2, column=symbols[col], date=str(dates[row])
        )
    return ReturnPanel(dates=dates, symbols=tuple(symbols), returns=matrix)
