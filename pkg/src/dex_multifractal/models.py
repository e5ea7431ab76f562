"""
Domain models for dex-multifractal.

These models carry data between the pipeline stages: raw ticks, regular
interval series, fluctuation surfaces and the exponents estimated from them.
Array-valued fields are numpy arrays marked read-only after construction, so
instances can be shared between threads.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np
import numpy.typing as npt

from .errors import ValidationError

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]


def _frozen_array(values: Any, dtype: Any = np.float64) -> np.ndarray:
    """Copy values into a contiguous read-only array."""
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Dialect(Enum):
    """Supported tick file layouts."""

    GENERIC = "generic"
    BINANCE_AGGTRADES = "binance_aggtrades"

    @classmethod
    def from_string(cls, value: str) -> Dialect:
        """Parse dialect from string, handling various formats."""
        normalized = value.lower().replace("-", "_").replace(" ", "_")
        for dialect in cls:
            if dialect.value == normalized:
                return dialect
        raise ValidationError(f"Unknown dialect: {value}")


class SeriesKind(Enum):
    """What a regular series measures."""

    LOG_RETURN = "log_return"
    VOLUME = "volume"
    VOLATILITY = "volatility"

    @classmethod
    def from_string(cls, value: str) -> SeriesKind:
        normalized = value.lower().replace("-", "_").replace(" ", "_")
        aliases = {"returns": "log_return", "return": "log_return", "abs": "volatility"}
        normalized = aliases.get(normalized, normalized)
        for kind in cls:
            if kind.value == normalized:
                return kind
        raise ValidationError(f"Unknown series kind: {value}")


class SurrogateKind(Enum):
    """Randomization schemes for significance testing."""

    SHUFFLE = "shuffle"
    FOURIER = "fourier"

    @classmethod
    def from_string(cls, value: str) -> SurrogateKind:
        normalized = value.lower().strip()
        for kind in cls:
            if kind.value == normalized:
                return kind
        raise ValidationError(f"Unknown surrogate kind: {value}")


# ── Ticks ───────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class TickRecord:
    """A single trade."""

    timestamp_ms: int
    price: float
    volume_usd: float

    def __post_init__(self) -> None:
        if self.timestamp_ms < 0:
            raise ValidationError(f"Negative timestamp: {self.timestamp_ms}")
        if not self.price > 0:
            raise ValidationError(f"Non-positive price: {self.price}")
        if not self.volume_usd >= 0:
            raise ValidationError(f"Negative volume: {self.volume_usd}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestamp_ms": self.timestamp_ms,
            "price": self.price,
            "volume_usd": self.volume_usd,
        }


@dataclass(frozen=True, eq=False)
class TickSeries:
    """Time-ordered trades for one trading pair or liquidity pool.

    Stored column-wise; ``records`` materializes TickRecord objects on demand.
    An empty series is representable (a filter may remove every trade) but
    most downstream operations reject it.
    """

    pair_id: str
    timestamps_ms: IntArray
    prices: FloatArray
    volumes_usd: FloatArray
    source_dialect: Dialect = Dialect.GENERIC

    def __post_init__(self) -> None:
        ts = _frozen_array(self.timestamps_ms, np.int64)
        prices = _frozen_array(self.prices)
        volumes = _frozen_array(self.volumes_usd)
        if not (ts.shape == prices.shape == volumes.shape) or ts.ndim != 1:
            raise ValidationError("Tick columns must be 1-D and of equal length")
        if ts.size and np.any(np.diff(ts) < 0):
            raise ValidationError(f"Ticks for {self.pair_id} are not sorted by timestamp")
        if ts.size and ts[0] < 0:
            raise ValidationError(f"Negative timestamp in {self.pair_id}")
        if np.any(~(prices > 0)):
            raise ValidationError(f"Non-positive price in {self.pair_id}")
        if np.any(~(volumes >= 0)):
            raise ValidationError(f"Negative volume in {self.pair_id}")
        object.__setattr__(self, "timestamps_ms", ts)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "volumes_usd", volumes)

    @classmethod
    def from_records(
        cls,
        pair_id: str,
        records: Sequence[TickRecord],
        source_dialect: Dialect = Dialect.GENERIC,
    ) -> TickSeries:
        """Build a series from records, sorting stably by timestamp."""
        ts = np.array([r.timestamp_ms for r in records], dtype=np.int64)
        order = np.argsort(ts, kind="mergesort")
        return cls(
            pair_id=pair_id,
            timestamps_ms=ts[order],
            prices=np.array([r.price for r in records], dtype=np.float64)[order],
            volumes_usd=np.array([r.volume_usd for r in records], dtype=np.float64)[order],
            source_dialect=source_dialect,
        )

    def __len__(self) -> int:
        return int(self.timestamps_ms.size)

    def __iter__(self) -> Iterator[TickRecord]:
        return iter(self.records)

    @property
    def records(self) -> list[TickRecord]:
        return [
            TickRecord(int(t), float(p), float(v))
            for t, p, v in zip(self.timestamps_ms, self.prices, self.volumes_usd)
        ]

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    def take(self, mask_or_index: np.ndarray, pair_id: str | None = None) -> TickSeries:
        """Select records by boolean mask or index array, keeping order."""
        return TickSeries(
            pair_id=pair_id or self.pair_id,
            timestamps_ms=self.timestamps_ms[mask_or_index],
            prices=self.prices[mask_or_index],
            volumes_usd=self.volumes_usd[mask_or_index],
            source_dialect=self.source_dialect,
        )


@dataclass(frozen=True)
class TickStats:
    """Per-series trade statistics (number of trades, mean gap, volumes)."""

    n: int
    mean_interval_s: float
    mean_volume_usd: float
    max_volume_usd: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "mean_interval_s": self.mean_interval_s,
            "mean_volume_usd": self.mean_volume_usd,
            "max_volume_usd": self.max_volume_usd,
        }


# ── Regular series ──────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class RegularSeries:
    """Fixed-interval series of log-returns, volume or volatility."""

    values: FloatArray
    start_ms: int
    dt_ms: int
    kind: SeriesKind
    normalized: bool = False
    name: str = ""
    attrs: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        values = _frozen_array(self.values)
        if values.ndim != 1:
            raise ValidationError("Series values must be one-dimensional")
        if self.dt_ms <= 0:
            raise ValidationError(f"dt_ms must be positive, got {self.dt_ms}")
        if not np.all(np.isfinite(values)):
            raise ValidationError(f"Series {self.label} contains non-finite values")
        # Phase-randomized copies of non-negative series may dip below zero.
        if (
            not self.normalized
            and self.kind in (SeriesKind.VOLUME, SeriesKind.VOLATILITY)
            and "surrogate" not in self.attrs
            and np.any(values < 0)
        ):
            raise ValidationError(f"Series {self.label} of kind {self.kind.value} has negatives")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def label(self) -> str:
        return self.name or self.kind.value

    @property
    def end_ms(self) -> int:
        """Start of the interval after the last value."""
        return self.start_ms + len(self) * self.dt_ms

    def with_values(self, values: Any, **changes: Any) -> RegularSeries:
        """Copy with new values (and optionally other fields)."""
        return replace(self, values=values, **changes)

    def to_dict(self, include_values: bool = True) -> dict[str, Any]:
        data: dict[str, Any] = {
            "name": self.name,
            "kind": self.kind.value,
            "start_ms": self.start_ms,
            "dt_ms": self.dt_ms,
            "normalized": self.normalized,
            "length": len(self),
        }
        if self.attrs:
            data["attrs"] = self.attrs
        if include_values:
            data["values"] = self.values.tolist()
        return data


@dataclass(frozen=True)
class AggregationReport:
    """Diagnostics of a tick-to-interval aggregation."""

    n_bins: int
    zero_return_fraction: float
    mean_bin_volume: float
    start_ms: int
    dt_ms: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.zero_return_fraction <= 1.0:
            raise ValidationError("zero_return_fraction must lie in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_bins": self.n_bins,
            "zero_return_fraction": self.zero_return_fraction,
            "mean_bin_volume": self.mean_bin_volume,
            "start_ms": self.start_ms,
            "dt_ms": self.dt_ms,
        }


# ── Distributions ───────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class CcdfCurve:
    """Empirical P(X > x) over the distinct sample values below the maximum."""

    x: FloatArray
    p: FloatArray
    n: int

    def __post_init__(self) -> None:
        x = _frozen_array(self.x)
        p = _frozen_array(self.p)
        if x.shape != p.shape or x.ndim != 1:
            raise ValidationError("CCDF x and p must be 1-D and of equal length")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ValidationError("CCDF x values must be strictly increasing")
        if np.any((p <= 0) | (p > 1)):
            raise ValidationError("CCDF probabilities must lie in (0, 1]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    def __len__(self) -> int:
        return int(self.x.size)

    @property
    def positive(self) -> tuple[FloatArray, FloatArray]:
        """Points with x > 0, usable on log axes."""
        mask = self.x > 0
        return self.x[mask], self.p[mask]

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "x": self.x.tolist(), "p": self.p.tolist()}


@dataclass(frozen=True)
class TailFit:
    """Power-law tail exponent γ of P(X > x) ~ x^-γ."""

    gamma: float
    stderr: float
    x_min: float
    n_tail: int
    method: str = "regression"

    def to_dict(self) -> dict[str, Any]:
        return {
            "gamma": self.gamma,
            "stderr": self.stderr,
            "x_min": self.x_min,
            "n_tail": self.n_tail,
            "method": self.method,
        }


@dataclass(frozen=True)
class StretchedFit:
    """Stretched exponential ln P(X > x) = -(x/x0)^β + c."""

    beta: float
    x0: float
    offset: float
    residual: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "beta": self.beta,
            "x0": self.x0,
            "offset": self.offset,
            "residual": self.residual,
        }


# ── Regression ──────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LinFit:
    """Ordinary least-squares line with the classical slope standard error."""

    slope: float
    intercept: float
    slope_stderr: float
    r2: float
    n: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_stderr": self.slope_stderr,
            "r2": self.r2,
            "n": self.n,
        }


# ── Grids and fluctuation surfaces ──────────────────────────────────────


@dataclass(frozen=True, eq=False)
class QGrid:
    """Ordered moment orders q; always contains q = 2."""

    values: FloatArray

    def __post_init__(self) -> None:
        values = _frozen_array(self.values)
        if values.ndim != 1 or values.size == 0:
            raise ValidationError("q grid must be a non-empty 1-D sequence")
        if values.size > 1 and np.any(np.diff(values) <= 0):
            raise ValidationError("q grid must be strictly increasing")
        if not np.any(np.isclose(values, 2.0, rtol=0, atol=1e-12)):
            raise ValidationError("q grid must contain q = 2")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_range(cls, start: float, stop: float, step: float) -> QGrid:
        """Inclusive arithmetic grid, rounded so that 0 and 2 are exact."""
        if step <= 0 or stop < start:
            raise ValidationError(f"Invalid q range {start}:{stop}:{step}")
        count = int(round((stop - start) / step)) + 1
        return cls(np.round(start + step * np.arange(count), 10))

    @classmethod
    def from_spec(cls, spec: str) -> QGrid:
        """Parse ``start:stop:step`` or a comma-separated list."""
        text = spec.strip()
        try:
            if ":" in text:
                start, stop, step = (float(part) for part in text.split(":"))
                return cls.from_range(start, stop, step)
            return cls(np.array([float(part) for part in text.split(",")]))
        except ValueError as e:
            if isinstance(e, ValidationError):
                raise
            raise ValidationError(f"Invalid q grid spec: {spec!r}") from e

    @classmethod
    def default(cls) -> QGrid:
        return cls.from_range(-4.0, 4.0, 0.2)

    def __len__(self) -> int:
        return int(self.values.size)

    def index(self, q: float) -> int:
        """Position of q in the grid (tolerance 1e-9)."""
        hits = np.flatnonzero(np.isclose(self.values, q, rtol=0, atol=1e-9))
        if hits.size == 0:
            raise ValidationError(f"q = {q} is not on the grid")
        return int(hits[0])

    def to_list(self) -> list[float]:
        return self.values.tolist()


@dataclass(frozen=True)
class ScaleGrid:
    """Strictly increasing integer segment lengths s."""

    scales: tuple[int, ...]

    def __post_init__(self) -> None:
        scales = tuple(int(s) for s in self.scales)
        if not scales:
            raise ValidationError("Scale grid is empty")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValidationError("Scale grid must be strictly increasing")
        if scales[0] < 2:
            raise ValidationError(f"Smallest scale must be at least 2, got {scales[0]}")
        object.__setattr__(self, "scales", scales)

    @property
    def s_min(self) -> int:
        return self.scales[0]

    @property
    def s_max(self) -> int:
        return self.scales[-1]

    @property
    def count(self) -> int:
        return len(self.scales)

    def as_array(self) -> FloatArray:
        return np.asarray(self.scales, dtype=np.float64)

    def to_list(self) -> list[int]:
        return list(self.scales)


@dataclass(frozen=True, eq=False)
class FluctuationSurface:
    """F(q, s) over a q grid and a scale grid.

    ``dropped`` and ``segments`` count, per scale, the zero-variance segments
    left out of q <= 0 averages and the 2·M_s segments available.
    """

    q_grid: QGrid
    scales: ScaleGrid
    F: FloatArray
    signed: bool = False
    m: int = 2
    dropped: IntArray | None = None
    segments: IntArray | None = None

    # A scale is unusable when more than this share of segments was dropped.
    UNUSABLE_DROP_SHARE = 0.01

    def __post_init__(self) -> None:
        F = _frozen_array(self.F)
        if F.shape != (len(self.q_grid), self.scales.count):
            raise ValidationError(
                f"Surface shape {F.shape} does not match grids "
                f"({len(self.q_grid)}, {self.scales.count})"
            )
        if not self.signed and np.any(F[np.isfinite(F)] <= 0):
            raise ValidationError("Unsigned fluctuation surface must be strictly positive")
        zeros = np.zeros(self.scales.count, dtype=np.int64)
        dropped = zeros if self.dropped is None else self.dropped
        segments = zeros if self.segments is None else self.segments
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "dropped", _frozen_array(dropped, np.int64))
        object.__setattr__(self, "segments", _frozen_array(segments, np.int64))

    def row(self, q: float) -> FloatArray:
        return self.F[self.q_grid.index(q)]

    @property
    def unusable_scales(self) -> list[int]:
        assert self.dropped is not None and self.segments is not None
        flagged = []
        for s, dropped, total in zip(self.scales.scales, self.dropped, self.segments):
            if total and dropped / total > self.UNUSABLE_DROP_SHARE:
                flagged.append(s)
        return flagged

    def to_dict(self) -> dict[str, Any]:
        assert self.dropped is not None and self.segments is not None
        return {
            "q": self.q_grid.to_list(),
            "s": self.scales.to_list(),
            "signed": self.signed,
            "m": self.m,
            "F": [None if not math.isfinite(v) else v for v in self.F.ravel().tolist()],
            "dropped": self.dropped.tolist(),
            "segments": self.segments.tolist(),
            "unusable_scales": self.unusable_scales,
        }


# ── Exponents and spectra ───────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class HurstCurve:
    """Generalized Hurst exponents h(q) with regression standard errors."""

    q: FloatArray
    h: FloatArray
    stderr: FloatArray
    fit_range: tuple[float, float]
    r2: FloatArray | None = None

    def __post_init__(self) -> None:
        q = _frozen_array(self.q)
        h = _frozen_array(self.h)
        stderr = _frozen_array(self.stderr)
        if not (q.shape == h.shape == stderr.shape):
            raise ValidationError("HurstCurve arrays must have equal length")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(stderr))):
            raise ValidationError("HurstCurve values must be finite")
        if np.any(stderr < 0):
            raise ValidationError("Standard errors must be non-negative")
        r2 = np.ones_like(h) if self.r2 is None else self.r2
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "stderr", stderr)
        object.__setattr__(self, "r2", _frozen_array(r2))

    def __len__(self) -> int:
        return int(self.q.size)

    @property
    def H(self) -> float | None:
        """h(2), the Hurst exponent, when q = 2 is on the grid."""
        hits = np.flatnonzero(np.isclose(self.q, 2.0, rtol=0, atol=1e-9))
        return float(self.h[hits[0]]) if hits.size else None

    @property
    def min_r2(self) -> float:
        """Worst per-q coefficient of determination; a scaling-quality flag."""
        assert self.r2 is not None
        return float(np.min(self.r2)) if self.r2.size else float("nan")

    def at(self, q: float) -> float:
        hits = np.flatnonzero(np.isclose(self.q, q, rtol=0, atol=1e-9))
        if hits.size == 0:
            raise ValidationError(f"q = {q} is not on the curve")
        return float(self.h[hits[0]])

    def to_dict(self) -> dict[str, Any]:
        assert self.r2 is not None
        return {
            "q": self.q.tolist(),
            "h": self.h.tolist(),
            "stderr": self.stderr.tolist(),
            "r2": self.r2.tolist(),
            "fit_range": list(self.fit_range),
            "H": self.H,
            "min_r2": self.min_r2,
        }


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Singularity spectrum f(α), points listed in q order."""

    q: FloatArray
    alpha: FloatArray
    f_alpha: FloatArray

    def __post_init__(self) -> None:
        q = _frozen_array(self.q)
        alpha = _frozen_array(self.alpha)
        f_alpha = _frozen_array(self.f_alpha)
        if not (q.shape == alpha.shape == f_alpha.shape):
            raise ValidationError("Spectrum arrays must have equal length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "f_alpha", f_alpha)

    def __len__(self) -> int:
        return int(self.alpha.size)

    @property
    def width(self) -> float:
        return float(np.max(self.alpha) - np.min(self.alpha))

    @property
    def apex_index(self) -> int:
        return int(np.argmax(self.f_alpha))

    def to_dict(self) -> dict[str, Any]:
        return {
            "q": self.q.tolist(),
            "alpha": self.alpha.tolist(),
            "f_alpha": self.f_alpha.tolist(),
            "width": self.width,
        }


@dataclass(frozen=True, eq=False)
class LambdaCurve:
    """Cross-correlation scaling exponents λ(q) on the q values with uniform sign."""

    q: FloatArray
    lam: FloatArray
    stderr: FloatArray
    fit_range: tuple[float, float]
    sign_profile: dict[float, str] = field(default_factory=dict)
    excluded: dict[float, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        q = _frozen_array(self.q)
        lam = _frozen_array(self.lam)
        stderr = _frozen_array(self.stderr)
        if not (q.shape == lam.shape == stderr.shape):
            raise ValidationError("LambdaCurve arrays must have equal length")
        if not np.all(np.isfinite(lam)):
            raise ValidationError("λ values must be finite on their domain")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "stderr", stderr)

    def __len__(self) -> int:
        return int(self.q.size)

    def to_dict(self) -> dict[str, Any]:
        return {
            "q": self.q.tolist(),
            "lambda": self.lam.tolist(),
            "stderr": self.stderr.tolist(),
            "fit_range": list(self.fit_range),
            "sign_profile": {str(k): v for k, v in self.sign_profile.items()},
            "excluded": {str(k): v for k, v in self.excluded.items()},
        }


@dataclass(frozen=True, eq=False)
class RhoSurface:
    """Detrended cross-correlation coefficient ρ(q, s) for one q."""

    q: float
    scales: ScaleGrid
    rho: FloatArray
    flagged: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        rho = _frozen_array(self.rho)
        if rho.shape != (self.scales.count,):
            raise ValidationError("ρ values must match the scale grid")
        if math.isclose(self.q, 2.0) and np.any(np.abs(rho[np.isfinite(rho)]) > 1 + 1e-9):
            raise ValidationError("|ρ(2, s)| exceeds 1")
        object.__setattr__(self, "rho", rho)

    def to_dict(self) -> dict[str, Any]:
        return {
            "q": self.q,
            "s": self.scales.to_list(),
            "rho": [None if not math.isfinite(v) else v for v in self.rho.tolist()],
            "flagged": list(self.flagged),
        }


# ── Surrogates and synthetic data ───────────────────────────────────────


@dataclass(frozen=True)
class SurrogateSpec:
    """Which surrogate to draw and from which random stream."""

    kind: SurrogateKind
    seed: int = 0
    replicate_index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.replicate_index < 0:
            raise ValidationError("replicate_index must be non-negative")

    def rng(self) -> np.random.Generator:
        """Independent stream for (seed, replicate_index).

        The replicate index is the spawn key of a SeedSequence rooted at the
        seed, so replicates never share a stream and the mapping is stable
        across numpy versions.
        """
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.replicate_index,))
        return np.random.Generator(np.random.PCG64(sequence))

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "seed": self.seed,
            "replicate_index": self.replicate_index,
        }


@dataclass(frozen=True)
class CascadeParams:
    """Binomial multiplicative cascade of 2^levels points with weight p."""

    levels: int
    p: float

    def __post_init__(self) -> None:
        if not 8 <= self.levels <= 24:
            raise ValidationError(f"levels must lie in [8, 24], got {self.levels}")
        if not 0.5 < self.p < 1.0:
            raise ValidationError(f"p must lie in (0.5, 1), got {self.p}")

    @property
    def length(self) -> int:
        return 2**self.levels
