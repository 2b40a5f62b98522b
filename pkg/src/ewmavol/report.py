"""Plot-ready CSV outputs with a ``#``-prefixed manifest header block.

Floats are written with ``repr`` (shortest string that round-trips), so
reading a file back reproduces every value bit for bit. Nothing here
depends on the wall clock unless the caller puts it in the manifest.
"""

from __future__ import annotations

import datetime as _dt
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .backtest import BacktestConfig, BacktestSurface, LambdaGrid, StrategyLossSeries
from .errors import ContractError, EmptyInputError
from .ingest import ReturnPanel
from .stats import DMReport

PathLike = Union[str, "os.PathLike[str]"]


def fmt_float(x: float) -> str:
    return repr(float(x))


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt_float(value)
    if value is None:
        return ""
    if isinstance(value, (list, tuple)):
        return " ".join(_fmt_value(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class RunManifest:
    """Everything besides the input file needed to reproduce a run."""

    horizon_days: int
    grid: Tuple[float, ...]
    evaluation_start: Optional[str]
    evaluation_end: Optional[str]
    tolerance: float
    max_lags: Optional[int]
    symbols: Tuple[str, ...]
    first_date: str
    last_date: str
    row_count: int
    backend: str
    software_version: str
    timestamp: Optional[str] = None
    source: Optional[str] = None

    @classmethod
    def build(
        cls,
        config: BacktestConfig,
        returns: ReturnPanel,
        *,
        backend: str,
        source: Optional[PathLike] = None,
    ) -> "RunManifest":
        from . import __version__

        start, end = config.evaluation_range or (None, None)
        return cls(
            horizon_days=int(config.horizon_days),
            grid=tuple(config.grid.values),
            evaluation_start=None if start is None else str(np.datetime64(start, "D")),
            evaluation_end=None if end is None else str(np.datetime64(end, "D")),
            tolerance=float(config.truncation.tolerance),
            max_lags=config.truncation.max_lags,
            symbols=tuple(returns.symbols),
            first_date=str(returns.dates[0]),
            last_date=str(returns.dates[-1]),
            row_count=int(returns.n_dates),
            backend=backend,
            software_version=__version__,
            timestamp=run_timestamp(source),
            source=None if source is None else os.path.basename(os.fspath(source)),
        )

    def lines(self) -> List[str]:
        return [f"manifest.{k}: {_fmt_value(v)}" for k, v in asdict(self).items()]


def run_timestamp(source: Optional[PathLike] = None) -> Optional[str]:
    """Reproducible timestamp: ``SOURCE_DATE_EPOCH`` if set, else the input's mtime."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None and source is not None and os.path.exists(source):
        epoch = int(os.stat(source).st_mtime)
    if epoch is None:
        return None
    moment = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def _write(destination: PathLike, title: str, meta: Sequence[str], header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with open(destination, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {title}\n")
        for line in meta:
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def read_table(source: PathLike) -> Tuple[Dict[str, str], List[str], List[List[str]]]:
    """Split an emitted file into (metadata, header, data rows)."""
    meta: Dict[str, str] = {}
    header: Optional[List[str]] = None
    rows: List[List[str]] = []
    with open(source, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if ": " in body:
                    key, value = body.split(": ", 1)
                    meta[key] = value
                elif body.endswith(":"):
                    meta[body[:-1]] = ""
                continue
            if not line.strip():
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None:
                header = cells
            else:
                rows.append(cells)
    if header is None:
        raise EmptyInputError(f"{source}: no header row")
    return meta, header, rows


def _meta(manifest: Optional[RunManifest], extra: Sequence[str] = ()) -> List[str]:
    lines = list(extra)
    if manifest is not None:
        lines.extend(manifest.lines())
    return lines


def emit_mse_curve(curve: Sequence[Tuple[float, float]], destination: PathLike,
                   manifest: Optional[RunManifest] = None) -> None:
    if not len(curve):
        raise EmptyInputError("MSE curve is empty")
    ordered = sorted(curve, key=lambda pair: pair[0])
    rows = ((fmt_float(lam), fmt_float(mse)) for lam, mse in ordered)
    _write(destination, "ewmavol mse curve", _meta(manifest), ("lambda", "mse"), rows)


def read_mse_curve(source: PathLike) -> List[Tuple[float, float]]:
    _, header, rows = read_table(source)
    if header != ["lambda", "mse"]:
        raise ContractError(f"{source}: unexpected header {header}")
    return [(float(a), float(b)) for a, b in rows]


def emit_lambda_path(path: Sequence[Tuple[object, float]], destination: PathLike,
                     manifest: Optional[RunManifest] = None) -> None:
    if not len(path):
        raise EmptyInputError("optimal-lambda path is empty")
    rows = ((str(np.datetime64(day, "D")), fmt_float(lam)) for day, lam in path)
    _write(destination, "ewmavol optimal lambda path", _meta(manifest), ("date", "lambda_opt"), rows)


def read_lambda_path(source: PathLike) -> List[Tuple[np.datetime64, float]]:
    _, header, rows = read_table(source)
    if header != ["date", "lambda_opt"]:
        raise ContractError(f"{source}: unexpected header {header}")
    return [(np.datetime64(d, "D"), float(v)) for d, v in rows]


def emit_surface(surface: BacktestSurface, destination: PathLike,
                 manifest: Optional[RunManifest] = None) -> None:
    if surface.n_anchors == 0:
        raise EmptyInputError("surface has no anchors")
    extra = [f"surface.horizon_days: {surface.horizon_days}", f"surface.n_assets: {surface.n_assets}"]
    header = ["date"] + [fmt_float(lam) for lam in surface.grid.values]
    rows = (
        [str(day)] + [fmt_float(x) for x in row]
        for day, row in zip(surface.anchors, surface.losses)
    )
    _write(destination, "ewmavol squared-error surface", _meta(manifest, extra), header, rows)


def read_surface(source: PathLike) -> BacktestSurface:
    meta, header, rows = read_table(source)
    grid = LambdaGrid(tuple(float(h) for h in header[1:]))
    anchors = np.array([r[0] for r in rows], dtype="datetime64[D]")
    losses = np.array([[float(x) for x in r[1:]] for r in rows]).reshape(len(rows), len(grid))
    return BacktestSurface(
        anchors=anchors,
        grid=grid,
        losses=losses,
        horizon_days=int(meta["surface.horizon_days"]),
        n_assets=int(meta["surface.n_assets"]),
    )


def emit_comparison_table(
    fixed: StrategyLossSeries,
    adaptive: StrategyLossSeries,
    dm: Optional[DMReport],
    destination: PathLike,
    manifest: Optional[RunManifest] = None,
    *,
    lag_window: Optional[int] = None,
) -> None:
    """Fixed versus adaptive strategy summary plus the paired per-anchor losses.

    ``dm=None`` marks a degenerate comparison (zero-variance differential);
    the statistic and p-value are then written as ``nan``.
    """
    if not np.array_equal(fixed.anchors, adaptive.anchors):
        raise ContractError("comparison requires aligned loss series")
    degenerate = dm is None
    if lag_window is None:
        lag_window = dm.lag_window if dm is not None else 0
    nan = float("nan")
    extra = [
        f"fixed.label: {fixed.label}",
        f"fixed.mse: {fmt_float(fixed.mse)}",
        f"adaptive.label: {adaptive.label}",
        f"adaptive.mse: {fmt_float(adaptive.mse)}",
        f"dm.statistic: {fmt_float(nan if degenerate else dm.statistic)}",
        f"dm.p_value: {fmt_float(nan if degenerate else dm.p_value)}",
        f"dm.n: {len(fixed)}",
        f"dm.lag_window: {lag_window}",
        f"dm.long_run_variance: {fmt_float(nan if degenerate else dm.long_run_variance)}",
        f"dm.floored: {_fmt_value(False if degenerate else dm.floored)}",
        f"dm.degenerate: {_fmt_value(degenerate)}",
    ]
    rows = (
        (str(day), fmt_float(f), fmt_float(a))
        for day, f, a in zip(fixed.anchors, fixed.losses, adaptive.losses)
    )
    _write(destination, "ewmavol strategy comparison", _meta(manifest, extra),
           ("date", "fixed", "adaptive"), rows)


def read_comparison_table(source: PathLike) -> dict:
    meta, header, rows = read_table(source)
    if header != ["date", "fixed", "adaptive"]:
        raise ContractError(f"{source}: unexpected header {header}")
    anchors = np.array([r[0] for r in rows], dtype="datetime64[D]")
    out = {
        "fixed": StrategyLossSeries(anchors, [float(r[1]) for r in rows], meta["fixed.label"]),
        "adaptive": StrategyLossSeries(anchors, [float(r[2]) for r in rows], meta["adaptive.label"]),
        "fixed_mse": float(meta["fixed.mse"]),
        "adaptive_mse": float(meta["adaptive.mse"]),
        "dm_statistic": float(meta["dm.statistic"]),
        "p_value": float(meta["dm.p_value"]),
        "n": int(meta["dm.n"]),
        "lag_window": int(meta["dm.lag_window"]),
        "long_run_variance": float(meta["dm.long_run_variance"]),
        "degenerate": meta["dm.degenerate"] == "true",
        "meta": meta,
    }
    return out


SUMMARY_COLUMNS = (
    "horizon_days", "lambda_fixed", "mse_fixed", "mse_adaptive",
    "dm_statistic", "p_value", "n", "lag_window",
)


def emit_comparison_summary(rows: Sequence[dict], destination: PathLike,
                            manifest: Optional[RunManifest] = None) -> None:
    """One line per horizon: both MSEs and the DM statistic (the Table-3 layout)."""
    if not rows:
        raise EmptyInputError("no horizons to summarize")

    def cells(row):
        return [
            str(int(row["horizon_days"])), fmt_float(row["lambda_fixed"]),
            fmt_float(row["mse_fixed"]), fmt_float(row["mse_adaptive"]),
            fmt_float(row["dm_statistic"]), fmt_float(row["p_value"]),
            str(int(row["n"])), str(int(row["lag_window"])),
        ]

    _write(destination, "ewmavol horizon summary", _meta(manifest), SUMMARY_COLUMNS,
           (cells(r) for r in rows))


def read_comparison_summary(source: PathLike) -> List[dict]:
    _, header, rows = read_table(source)
    if tuple(header) != SUMMARY_COLUMNS:
        raise ContractError(f"{source}: unexpected header {header}")
    casts = (int, float, float, float, float, float, int, int)
    return [{k: f(v) for k, f, v in zip(SUMMARY_COLUMNS, casts, r)} for r in rows]


def read_loss_series(source: PathLike, column: Optional[str] = None) -> StrategyLossSeries:
    """Read one loss column (plus the leading date column) from any emitted table.

    ``column`` may be omitted when the file has exactly one value column.
    """
    _, header, rows = read_table(source)
    if not header or header[0] != "date":
        raise ContractError(f"{source}: first column must be 'date'")
    values = header[1:]
    if column is None:
        if len(values) != 1:
            raise ContractError(f"{source}: choose a column from {values}")
        column = values[0]
    if column not in values:
        raise ContractError(f"{source}: no column {column!r} (have {values})")
    k = header.index(column)
    anchors = np.array([r[0] for r in rows], dtype="datetime64[D]")
    return StrategyLossSeries(anchors, [float(r[k]) for r in rows], column)
