"""
Tick ingestion for dex-multifractal.

Reads raw trade files into TickSeries, applies the minimum-volume filter
and merges the tick streams of several liquidity pools.

Supported dialects:
- generic: header ``timestamp_ms,price,volume_usd``
- binance_aggtrades: headerless ``aggTradeId,price,quantity,firstTradeId,
  lastTradeId,timestamp,isBuyerMaker,isBestMatch`` (volume = price × quantity)
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ValidationError
from .models import Dialect, TickSeries, TickStats

logger = logging.getLogger("dex-multifractal.ingest")

GENERIC_COLUMNS = ["timestamp_ms", "price", "volume_usd"]
BINANCE_COLUMNS = [
    "agg_trade_id",
    "price",
    "quantity",
    "first_trade_id",
    "last_trade_id",
    "timestamp",
    "is_buyer_maker",
    "is_best_match",
]

# Binance spot files switched to microsecond timestamps in 2025.
_MICROSECOND_THRESHOLD = 10**14

# Row numbers in error messages are capped to keep them readable.
_MAX_REPORTED_ROWS = 10


def _format_rows(rows: Iterable[int]) -> str:
    rows = list(rows)
    shown = ", ".join(str(r) for r in rows[:_MAX_REPORTED_ROWS])
    if len(rows) > _MAX_REPORTED_ROWS:
        shown += f" (+{len(rows) - _MAX_REPORTED_ROWS} more)"
    return shown


def _numeric_column(frame: pd.DataFrame, column: str, first_line: int, path: Path) -> np.ndarray:
    """Convert a string column to float64, reporting unparsable file lines.

    Valid strings go through numpy's correctly rounded parser, so values
    written with repr() come back bit-identical.
    """
    raw = frame[column].str.strip()
    coerced = pd.to_numeric(raw, errors="coerce")
    bad = np.flatnonzero(coerced.isna().to_numpy() | ~np.isfinite(coerced.to_numpy(dtype=float)))
    if bad.size:
        raise ValidationError(
            f"{path}: unparsable {column} on row(s) {_format_rows(bad + first_line)}"
        )
    return raw.to_numpy(dtype=str).astype(np.float64)


def _read_generic(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    columns = [c.strip() for c in frame.columns]
    if columns != GENERIC_COLUMNS:
        raise ValidationError(
            f"{path}: malformed header {','.join(columns)!r}, "
            f"expected {','.join(GENERIC_COLUMNS)!r}"
        )
    frame.columns = columns
    first_line = 2
    ts = _numeric_column(frame, "timestamp_ms", first_line, path)
    non_integer = np.flatnonzero(ts != np.floor(ts))
    if non_integer.size:
        raise ValidationError(
            f"{path}: non-integer timestamp_ms on row(s) {_format_rows(non_integer + first_line)}"
        )
    prices = _numeric_column(frame, "price", first_line, path)
    volumes = _numeric_column(frame, "volume_usd", first_line, path)
    return ts.astype(np.int64), prices, volumes, first_line


def _read_binance(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
    if frame.shape[1] != len(BINANCE_COLUMNS):
        raise ValidationError(
            f"{path}: malformed header, expected {len(BINANCE_COLUMNS)} columns "
            f"for binance_aggtrades, found {frame.shape[1]}"
        )
    frame.columns = BINANCE_COLUMNS
    first_line = 1
    # Newer exports carry a header row.
    if len(frame) and pd.isna(pd.to_numeric(frame.iloc[0]["price"], errors="coerce")):
        frame = frame.iloc[1:].reset_index(drop=True)
        first_line = 2
    ts = _numeric_column(frame, "timestamp", first_line, path).astype(np.int64)
    ts = np.where(ts >= _MICROSECOND_THRESHOLD, ts // 1000, ts)
    prices = _numeric_column(frame, "price", first_line, path)
    quantity = _numeric_column(frame, "quantity", first_line, path)
    return ts, prices, prices * quantity, first_line


_READERS = {
    Dialect.GENERIC: _read_generic,
    Dialect.BINANCE_AGGTRADES: _read_binance,
}


def parse_ticks(
    path: Path | str,
    dialect: Dialect | str = Dialect.GENERIC,
    pair_id: str | None = None,
) -> TickSeries:
    """Parse a trade file into a TickSeries sorted by timestamp.

    Rows are sorted with a stable sort, so trades sharing a timestamp keep
    their file order.

    Raises:
        ValidationError: missing file, malformed header, unparsable rows,
            non-positive prices, negative volumes or an empty file
    """
    path = Path(path)
    if isinstance(dialect, str):
        dialect = Dialect.from_string(dialect)
    if not path.exists():
        raise ValidationError(f"Tick file not found: {path}")

    try:
        ts, prices, volumes, first_line = _READERS[dialect](path)
    except pd.errors.EmptyDataError as e:
        raise ValidationError(f"{path}: file is empty") from e
    except pd.errors.ParserError as e:
        raise ValidationError(f"{path}: cannot parse as CSV ({e})") from e

    if ts.size == 0:
        raise ValidationError(f"{path}: no trade records")
    bad_price = np.flatnonzero(~(prices > 0))
    if bad_price.size:
        raise ValidationError(
            f"{path}: non-positive price on row(s) {_format_rows(bad_price + first_line)}"
        )
    bad_volume = np.flatnonzero(~(volumes >= 0))
    if bad_volume.size:
        raise ValidationError(
            f"{path}: negative volume on row(s) {_format_rows(bad_volume + first_line)}"
        )
    bad_ts = np.flatnonzero(ts < 0)
    if bad_ts.size:
        raise ValidationError(
            f"{path}: negative timestamp on row(s) {_format_rows(bad_ts + first_line)}"
        )

    order = np.argsort(ts, kind="mergesort")
    ticks = TickSeries(
        pair_id=pair_id or path.stem,
        timestamps_ms=ts[order],
        prices=prices[order],
        volumes_usd=volumes[order],
        source_dialect=dialect,
    )
    logger.info("parsed ticks path=%s dialect=%s n=%d", path, dialect.value, len(ticks))
    return ticks


def write_ticks(ticks: TickSeries, path: Path | str) -> Path:
    """Write ticks as canonical generic CSV (floats in shortest repr)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        {
            "timestamp_ms": ticks.timestamps_ms,
            "price": [repr(float(v)) for v in ticks.prices],
            "volume_usd": [repr(float(v)) for v in ticks.volumes_usd],
        }
    )
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def filter_min_volume(ticks: TickSeries, threshold_usd: float) -> TickSeries:
    """Keep the trades with volume_usd ≥ threshold_usd, preserving order."""
    if threshold_usd < 0:
        raise ValidationError(f"Volume threshold must be non-negative, got {threshold_usd}")
    keep = ticks.volumes_usd >= threshold_usd
    removed = int(keep.size - np.count_nonzero(keep))
    if removed:
        logger.info(
            "filtered small trades pair=%s threshold_usd=%s removed=%d kept=%d",
            ticks.pair_id,
            threshold_usd,
            removed,
            keep.size - removed,
        )
    return ticks.take(keep)


def merge_pools(a: TickSeries, b: TickSeries) -> TickSeries:
    """Interleave two pools' trades by timestamp; at equal timestamps a's trades come first.

    The merged pair_id is ``"<a.pair_id>+<b.pair_id>"``.
    """
    if b.is_empty:
        return a
    if a.is_empty:
        return b
    ts = np.concatenate([a.timestamps_ms, b.timestamps_ms])
    # Stable sort on the concatenation keeps a before b at ties.
    order = np.argsort(ts, kind="mergesort")
    return TickSeries(
        pair_id=f"{a.pair_id}+{b.pair_id}",
        timestamps_ms=ts[order],
        prices=np.concatenate([a.prices, b.prices])[order],
        volumes_usd=np.concatenate([a.volumes_usd, b.volumes_usd])[order],
        source_dialect=a.source_dialect,
    )


def dedup(ticks: TickSeries) -> TickSeries:
    """Drop exact (timestamp, price, volume) duplicates, keeping the first occurrence."""
    frame = pd.DataFrame(
        {"t": ticks.timestamps_ms, "p": ticks.prices, "v": ticks.volumes_usd}
    )
    keep = ~frame.duplicated(keep="first").to_numpy()
    removed = int(keep.size - np.count_nonzero(keep))
    if removed:
        logger.info("removed duplicate trades pair=%s removed=%d", ticks.pair_id, removed)
    return ticks.take(keep)


def tick_stats(ticks: TickSeries) -> TickStats:
    """N, mean inter-trade time in seconds, mean and maximum trade volume."""
    if ticks.is_empty:
        raise ValidationError(f"Cannot compute statistics of empty series {ticks.pair_id}")
    n = len(ticks)
    span_ms = int(ticks.timestamps_ms[-1] - ticks.timestamps_ms[0])
    mean_interval = span_ms / (n - 1) / 1000.0 if n > 1 else 0.0
    return TickStats(
        n=n,
        mean_interval_s=mean_interval,
        mean_volume_usd=float(np.mean(ticks.volumes_usd)),
        max_volume_usd=float(np.max(ticks.volumes_usd)),
    )


def load_pools(
    sources: Iterable[tuple[Path | str, Dialect | str]],
    pair_id: str,
    min_volume_usd: float = 0.01,
    remove_duplicates: bool = False,
) -> TickSeries:
    """Parse, filter and merge the tick files of one pair.

    The volume filter runs per pool before merging; files are merged in the
    order given, so earlier pools win timestamp ties.
    """
    merged: TickSeries | None = None
    for path, dialect in sources:
        pool = parse_ticks(path, dialect)
        if remove_duplicates:
            pool = dedup(pool)
        pool = filter_min_volume(pool, min_volume_usd)
        merged = pool if merged is None else merge_pools(merged, pool)
    if merged is None:
        raise ValidationError(f"Pair {pair_id} has no tick files")
    if merged.is_empty:
        raise ValidationError(f"Pair {pair_id} has no trades left after filtering")
    return merged.take(np.arange(len(merged)), pair_id=pair_id)
