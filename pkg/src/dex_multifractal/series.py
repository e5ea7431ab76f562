"""
Regular-interval series for dex-multifractal.

Turns a TickSeries into fixed-Δt log-return and volume series, normalizes
them and keeps pairs of series on a common clock. Also reads and writes
RegularSeries as CSV (``index,value``) and JSON (metadata plus values).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt
import pandas as pd

from .errors import ValidationError
from .models import AggregationReport, RegularSeries, SeriesKind, TickSeries

logger = logging.getLogger("dex-multifractal.series")

MIN_ANALYSIS_LENGTH = 2


def _series_name(pair_id: str, kind: SeriesKind) -> str:
    return f"{pair_id}:{kind.value}"


def log_returns(prices: npt.ArrayLike) -> np.ndarray:
    """ln(p[i+1]/p[i]) for consecutive prices."""
    p = np.asarray(prices, dtype=np.float64)
    bad = np.flatnonzero(~(p > 0))
    if bad.size:
        raise ValidationError(f"Non-positive price at position(s) {bad[:10].tolist()}")
    return np.log(p[1:] / p[:-1])


def aggregate(
    ticks: TickSeries, dt_ms: int
) -> tuple[RegularSeries, RegularSeries, AggregationReport]:
    """Bin ticks into Δt intervals.

    Bins are ``[anchor + k·Δt, anchor + (k+1)·Δt)`` with the anchor the first
    timestamp rounded down to a multiple of Δt. The bin price is the last
    trade price in the bin; empty bins carry the previous price forward and
    contribute a zero return. Bin volume is the summed USD volume.

    Returns:
        (log-returns starting at anchor + Δt, volumes starting at anchor, report)

    Raises:
        ValidationError: Δt ≤ 0, no ticks, or fewer than two bins
    """
    if dt_ms <= 0:
        raise ValidationError(f"dt_ms must be positive, got {dt_ms}")
    if ticks.is_empty:
        raise ValidationError(f"Cannot aggregate empty series {ticks.pair_id}")

    ts = ticks.timestamps_ms
    anchor = int(ts[0] // dt_ms) * dt_ms
    bins = (ts - anchor) // dt_ms
    n_bins = int(bins[-1]) + 1
    if n_bins < 2:
        raise ValidationError(
            f"Ticks of {ticks.pair_id} span a single {dt_ms} ms bin; need at least 2 bins"
        )

    # Last trade of each occupied bin.
    last_in_bin = np.flatnonzero(np.diff(bins, append=bins[-1] + 1) != 0)
    closes = pd.Series(np.nan, index=np.arange(n_bins))
    closes.iloc[bins[last_in_bin]] = ticks.prices[last_in_bin]
    prices = closes.ffill().to_numpy()
    volumes = np.bincount(bins, weights=ticks.volumes_usd, minlength=n_bins)

    returns = log_returns(prices)
    report = AggregationReport(
        n_bins=n_bins,
        zero_return_fraction=float(np.count_nonzero(returns == 0.0) / returns.size),
        mean_bin_volume=float(volumes.mean()),
        start_ms=anchor,
        dt_ms=dt_ms,
    )
    empty = n_bins - last_in_bin.size
    logger.info(
        "aggregated pair=%s dt_ms=%d bins=%d empty_bins=%d zero_returns=%.4f",
        ticks.pair_id,
        dt_ms,
        n_bins,
        empty,
        report.zero_return_fraction,
    )

    return_series = RegularSeries(
        values=returns,
        start_ms=anchor + dt_ms,
        dt_ms=dt_ms,
        kind=SeriesKind.LOG_RETURN,
        name=_series_name(ticks.pair_id, SeriesKind.LOG_RETURN),
    )
    volume_series = RegularSeries(
        values=volumes,
        start_ms=anchor,
        dt_ms=dt_ms,
        kind=SeriesKind.VOLUME,
        name=_series_name(ticks.pair_id, SeriesKind.VOLUME),
    )
    return return_series, volume_series, report


def normalize(series: RegularSeries, center: bool = True) -> RegularSeries:
    """Z-score with the (n−1) sample standard deviation.

    With ``center=False`` the series is only divided by σ, so positive data
    stays positive and reads in units of σ.
    """
    values = series.values
    if values.size < MIN_ANALYSIS_LENGTH or np.ptp(values) == 0:
        raise ValidationError(f"Cannot normalize {series.label}: zero variance")
    std = float(np.std(values, ddof=1))
    scaled = (values - values.mean()) / std if center else values / std
    return series.with_values(scaled, normalized=True)


def absolute(series: RegularSeries) -> RegularSeries:
    """Volatility: elementwise |log-return|."""
    if series.kind is not SeriesKind.LOG_RETURN:
        raise ValidationError(
            f"absolute() needs a log_return series, {series.label} is {series.kind.value}"
        )
    name = series.name
    suffix = f":{SeriesKind.LOG_RETURN.value}"
    if name.endswith(suffix):
        name = name[: -len(suffix)] + f":{SeriesKind.VOLATILITY.value}"
    return series.with_values(np.abs(series.values), kind=SeriesKind.VOLATILITY, name=name)


def check_aligned(x: RegularSeries, y: RegularSeries) -> None:
    """Require a common clock: same start, interval and length."""
    problems = []
    if x.start_ms != y.start_ms:
        problems.append(f"start_ms {x.start_ms} vs {y.start_ms}")
    if x.dt_ms != y.dt_ms:
        problems.append(f"dt_ms {x.dt_ms} vs {y.dt_ms}")
    if len(x) != len(y):
        problems.append(f"length {len(x)} vs {len(y)}")
    if problems:
        raise ValidationError(
            f"Series {x.label!r} and {y.label!r} are not aligned: {'; '.join(problems)}"
        )


def align_pair(x: RegularSeries, y: RegularSeries) -> tuple[RegularSeries, RegularSeries]:
    """Trim two series with the same Δt to their common window.

    For a volatility/volume pair from one aggregation this drops the volume
    series' first bin, so index i of both refers to the same interval.
    """
    if x.dt_ms != y.dt_ms:
        raise ValidationError(
            f"Series {x.label!r} and {y.label!r} have different dt_ms: {x.dt_ms} vs {y.dt_ms}"
        )
    dt = x.dt_ms
    if (x.start_ms - y.start_ms) % dt:
        raise ValidationError(
            f"Series {x.label!r} and {y.label!r} sit on different bin grids "
            f"(start_ms {x.start_ms} vs {y.start_ms})"
        )
    start = max(x.start_ms, y.start_ms)
    end = min(x.end_ms, y.end_ms)
    length = (end - start) // dt
    if length < MIN_ANALYSIS_LENGTH:
        raise ValidationError(f"Series {x.label!r} and {y.label!r} barely overlap")

    def _window(s: RegularSeries) -> RegularSeries:
        offset = (start - s.start_ms) // dt
        if offset == 0 and length == len(s):
            return s
        return s.with_values(s.values[offset : offset + length], start_ms=start)

    return _window(x), _window(y)


# ── Serialization ───────────────────────────────────────────────────────


def save_series(
    series: RegularSeries, path: Path | str, extra: dict[str, Any] | None = None
) -> Path:
    """Write a series as JSON (``.json``) or ``index,value`` CSV (anything else)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".json":
        document = series.to_dict()
        if extra:
            document.setdefault("attrs", {}).update(extra)
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    else:
        frame = pd.DataFrame(
            {"index": np.arange(len(series)), "value": [repr(float(v)) for v in series.values]}
        )
        frame.to_csv(path, index=False, lineterminator="\n")
    return path


def load_series(
    path: Path | str,
    kind: SeriesKind | str | None = None,
    dt_ms: int | None = None,
    start_ms: int = 0,
) -> RegularSeries:
    """Read a series written by save_series.

    JSON carries its own metadata. A CSV needs ``kind`` and ``dt_ms`` from
    the caller (defaults: log_return, 300000 ms).
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"Series file not found: {path}")

    if path.suffix == ".json":
        try:
            document = json.loads(path.read_text())
            return RegularSeries(
                values=np.asarray(document["values"], dtype=np.float64),
                start_ms=int(document["start_ms"]),
                dt_ms=int(document["dt_ms"]),
                kind=SeriesKind.from_string(document["kind"]),
                normalized=bool(document.get("normalized", False)),
                name=document.get("name", path.stem),
                attrs=document.get("attrs", {}),
            )
        except (KeyError, TypeError, json.JSONDecodeError) as e:
            raise ValidationError(f"{path}: not a series document ({e})") from e

    frame = pd.read_csv(path, dtype=str)
    if list(frame.columns) != ["index", "value"]:
        raise ValidationError(f"{path}: expected header 'index,value'")
    try:
        values = frame["value"].to_numpy(dtype=str).astype(np.float64)
    except ValueError as e:
        raise ValidationError(f"{path}: unparsable value ({e})") from e
    if isinstance(kind, str):
        kind = SeriesKind.from_string(kind)
    return RegularSeries(
        values=values,
        start_ms=start_ms,
        dt_ms=dt_ms or 300_000,
        kind=kind or SeriesKind.LOG_RETURN,
        name=path.stem,
    )
