"""
Detrending engine shared by MFDFA and MFCCA.

The profile (cumulative sum of the mean-subtracted series) is cut into
M_s = ⌊T/s⌋ segments from the start and M_s more from the end. Each
segment loses its least-squares polynomial trend of order m; the
residual variances (or covariances, for two series) are then averaged
with q-th order moments into F(q, s).

Trends are removed by projecting onto an orthonormal basis built from
Legendre polynomials on [-1, 1], so the conditioning of the fit does not
depend on the segment length.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np
import numpy.typing as npt
from numpy.polynomial import legendre

from .errors import AnalysisError, ValidationError
from .models import FluctuationSurface, QGrid, RegularSeries, ScaleGrid
from .series import check_aligned

logger = logging.getLogger("dex-multifractal.detrend")

MIN_ORDER = 1
MAX_ORDER = 4

# Segment variances at or below this fraction of the largest one at the
# same scale count as zero.
ZERO_VARIANCE_RTOL = 1e-20


def _as_values(series: RegularSeries | npt.ArrayLike) -> np.ndarray:
    if isinstance(series, RegularSeries):
        return series.values
    return np.asarray(series, dtype=np.float64)


def _check_order(m: int) -> None:
    if not MIN_ORDER <= m <= MAX_ORDER:
        raise ValidationError(f"Detrending order m must lie in [{MIN_ORDER}, {MAX_ORDER}], got {m}")


def profile(series: RegularSeries | npt.ArrayLike) -> np.ndarray:
    """Cumulative sum of the series after subtracting its global mean."""
    values = _as_values(series)
    if values.size < 2:
        raise ValidationError(f"Profile needs at least 2 values, got {values.size}")
    return np.cumsum(values - values.mean())


def segment_bounds(length: int, s: int) -> list[tuple[int, int]]:
    """Half-open index ranges of the 2·M_s segments: forward ones first, then backward."""
    if s < 1:
        raise ValidationError(f"Scale must be positive, got {s}")
    if s > length:
        raise ValidationError(f"Scale {s} exceeds series length {length}")
    count = length // s
    offset = length - count * s
    forward = [(v * s, (v + 1) * s) for v in range(count)]
    backward = [(offset + v * s, offset + (v + 1) * s) for v in range(count)]
    return forward + backward


@lru_cache(maxsize=256)
def trend_basis(s: int, m: int) -> np.ndarray:
    """Orthonormal s × (m+1) basis of polynomials of degree ≤ m over a segment."""
    if s < m + 2:
        raise ValidationError(f"Segment length {s} too short for order-{m} detrending")
    grid = np.linspace(-1.0, 1.0, s)
    basis, triangular = np.linalg.qr(legendre.legvander(grid, m))
    diagonal = np.abs(np.diag(triangular))
    if diagonal.min() <= 1e-10 * diagonal.max():
        raise AnalysisError(f"Ill-conditioned order-{m} trend basis for segment length {s}")
    basis.setflags(write=False)
    return basis


def detrend_segment(prof: npt.ArrayLike, bounds: tuple[int, int], m: int = 2) -> np.ndarray:
    """Residuals of the order-m least-squares polynomial fit within one segment."""
    start, stop = bounds
    values = np.asarray(prof, dtype=np.float64)[start:stop]
    if values.size != stop - start:
        raise ValidationError(f"Segment {bounds} lies outside a profile of length {len(prof)}")
    basis = trend_basis(stop - start, m)
    return values - basis @ (basis.T @ values)


def segment_cov(rx: npt.ArrayLike, ry: npt.ArrayLike) -> float:
    """Mean product of two residual vectors; the segment variance when rx is ry."""
    a = np.asarray(rx, dtype=np.float64)
    b = np.asarray(ry, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"Residual lengths differ: {a.size} vs {b.size}")
    return float(np.mean(a * b))


# ── Vectorized surfaces ─────────────────────────────────────────────────


def _segments(prof: np.ndarray, s: int) -> np.ndarray:
    """All 2·M_s segments of a profile stacked as rows (forward, then backward)."""
    count = prof.size // s
    forward = prof[: count * s].reshape(count, s)
    backward = prof[prof.size - count * s :].reshape(count, s)
    return np.vstack([forward, backward])


def _residuals(prof: np.ndarray, s: int, m: int) -> np.ndarray:
    rows = _segments(prof, s)
    basis = trend_basis(s, m)
    return rows - (rows @ basis) @ basis.T


def _segment_products(profiles: tuple[np.ndarray, ...], s: int, m: int) -> np.ndarray:
    rx = _residuals(profiles[0], s, m)
    ry = rx if len(profiles) == 1 else _residuals(profiles[1], s, m)
    return np.mean(rx * ry, axis=1)


def _signed_power_mean(values: np.ndarray, signs: np.ndarray, q: float) -> float:
    """sign(a)·|a|^(1/q) with a = mean(sign·|f²|^(q/2))."""
    average = float(np.mean(signs * values ** (q / 2.0)))
    return math.copysign(abs(average) ** (1.0 / q), average) if average else 0.0


def q_moments(f2: np.ndarray, q_values: np.ndarray) -> tuple[np.ndarray, int]:
    """F(q) at one scale from the segment (co)variances f².

    Zero segments are left out for q ≤ 0. q = 0 uses the logarithmic limit
    with the sign of the summed segment signs. Returns the F values and the
    number of segments left out of the q ≤ 0 averages.
    """
    magnitude = np.abs(f2)
    signs = np.sign(f2)
    nonzero = magnitude > ZERO_VARIANCE_RTOL * magnitude.max()
    has_nonpositive_q = bool(np.any(q_values <= 0))
    dropped = int(f2.size - np.count_nonzero(nonzero)) if has_nonpositive_q else 0
    kept_magnitude = magnitude[nonzero]
    kept_signs = signs[nonzero]

    out = np.empty(q_values.size)
    for i, q in enumerate(q_values):
        if q > 0:
            out[i] = _signed_power_mean(magnitude, signs, q)
        elif kept_magnitude.size == 0:
            out[i] = np.nan
        elif abs(q) < 1e-12:
            out[i] = np.sign(np.sum(kept_signs)) * math.exp(0.5 * np.mean(np.log(kept_magnitude)))
        else:
            out[i] = _signed_power_mean(kept_magnitude, kept_signs, q)
    return out, dropped


def _check_scales(length: int, scales: ScaleGrid, m: int) -> None:
    _check_order(m)
    if scales.s_max > length:
        raise ValidationError(f"Largest scale {scales.s_max} exceeds series length {length}")
    if scales.s_min < m + 2:
        raise ValidationError(f"Smallest scale {scales.s_min} too short for order-{m} detrending")
    if scales.s_min < 2 * (m + 1):
        logger.warning("short segments s_min=%d m=%d", scales.s_min, m)
    if 4 * scales.s_max > length:
        logger.warning("few segments at largest scale T=%d s_max=%d", length, scales.s_max)


def _surface(
    profiles: tuple[np.ndarray, ...],
    q: QGrid,
    scales: ScaleGrid,
    m: int,
    signed: bool,
    workers: int,
) -> FluctuationSurface:
    def one_scale(s: int) -> tuple[np.ndarray, int, int]:
        f2 = _segment_products(profiles, s, m)
        if not signed and not np.any(f2 > 0):
            raise AnalysisError(f"All segment variances vanish at scale s={s}", stage="detrend")
        column, dropped = q_moments(f2, q.values)
        return column, dropped, f2.size

    # map() yields in scale order, so the result does not depend on workers.
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_scale, scales.scales))
    else:
        results = [one_scale(s) for s in scales.scales]

    F = np.column_stack([column for column, _, _ in results])
    dropped = np.array([d for _, d, _ in results], dtype=np.int64)
    segments = np.array([n for _, _, n in results], dtype=np.int64)
    surface = FluctuationSurface(
        q_grid=q,
        scales=scales,
        F=F,
        signed=signed,
        m=m,
        dropped=dropped,
        segments=segments,
    )
    for s, d, n in zip(scales.scales, dropped, segments):
        if d:
            logger.warning("zero-variance segments dropped s=%d dropped=%d segments=%d", s, d, n)
    for s in surface.unusable_scales:
        logger.warning("scale flagged unusable s=%d", s)
    return surface


def fluctuation_zz(
    series: RegularSeries | npt.ArrayLike,
    q: QGrid,
    scales: ScaleGrid,
    m: int = 2,
    workers: int = 1,
) -> FluctuationSurface:
    """MFDFA fluctuation function F_ZZ(q, s) of a single series."""
    values = _as_values(series)
    _check_scales(values.size, scales, m)
    return _surface((profile(values),), q, scales, m, signed=False, workers=workers)


def fluctuation_xy(
    x: RegularSeries | npt.ArrayLike,
    y: RegularSeries | npt.ArrayLike,
    q: QGrid,
    scales: ScaleGrid,
    m: int = 2,
    workers: int = 1,
) -> FluctuationSurface:
    """MFCCA fluctuation function F_XY(q, s) of two aligned series (signed)."""
    if isinstance(x, RegularSeries) and isinstance(y, RegularSeries):
        check_aligned(x, y)
    xv = _as_values(x)
    yv = _as_values(y)
    if xv.size != yv.size:
        raise ValidationError(f"Series lengths differ: {xv.size} vs {yv.size}")
    _check_scales(xv.size, scales, m)
    return _surface((profile(xv), profile(yv)), q, scales, m, signed=True, workers=workers)


def dfa(series: RegularSeries | npt.ArrayLike, scales: ScaleGrid, m: int = 2) -> np.ndarray:
    """Plain order-m DFA fluctuation F(s), one segment at a time.

    Fits polynomials in the raw in-segment index with numpy.polyfit; used as
    an independent check of F_ZZ(2, s).
    """
    _check_order(m)
    prof = profile(series)
    out = np.empty(scales.count)
    for j, s in enumerate(scales.scales):
        index = np.arange(1, s + 1, dtype=np.float64)
        variances = []
        for start, stop in segment_bounds(prof.size, s):
            chunk = prof[start:stop]
            trend = np.polyval(np.polyfit(index, chunk, m), index)
            variances.append(np.mean((chunk - trend) ** 2))
        out[j] = math.sqrt(float(np.mean(variances)))
    return out
