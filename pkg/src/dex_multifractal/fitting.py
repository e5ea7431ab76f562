"""
Shared regression utilities.

Power laws are fitted as straight lines in double-log axes with ordinary
least squares (scipy.stats.linregress); the slope standard error is the
classical one (residual variance over the spread of ln x).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
from scipy import stats

from .errors import AnalysisError, ValidationError
from .models import LinFit, ScaleGrid

logger = logging.getLogger("dex-multifractal.fitting")

MIN_FIT_POINTS = 3


def linear_fit(x: npt.ArrayLike, y: npt.ArrayLike) -> LinFit:
    """OLS line y = a + b·x with slope standard error and R²."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    n = int(xa.size)
    if n < MIN_FIT_POINTS:
        raise AnalysisError(f"Need at least {MIN_FIT_POINTS} points for a fit, got {n}")

    if np.ptp(xa) == 0.0:
        raise AnalysisError("All x values coincide; slope undefined")
    result = stats.linregress(xa, ya)
    # A constant y is fitted perfectly.
    r2 = 1.0 if np.ptp(ya) == 0.0 else min(1.0, float(result.rvalue) ** 2)
    return LinFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        slope_stderr=float(result.stderr),
        r2=r2,
        n=n,
    )


def loglog_fit(
    x: npt.ArrayLike,
    y: npt.ArrayLike,
    fit_range: Sequence[float] | None = None,
) -> LinFit:
    """Fit ln y = a + b·ln x over the points with x in [lo, hi].

    Raises:
        ValidationError: x and y differ in length
        AnalysisError: fewer than three points in range, or non-positive values
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape:
        raise ValidationError(f"x and y lengths differ: {xa.size} vs {ya.size}")

    if fit_range is not None:
        lo, hi = float(fit_range[0]), float(fit_range[1])
        mask = (xa >= lo) & (xa <= hi)
        xa, ya = xa[mask], ya[mask]
    if xa.size < MIN_FIT_POINTS:
        raise AnalysisError(
            f"Only {xa.size} points inside fit range {fit_range}, need {MIN_FIT_POINTS}"
        )
    if np.any(~(xa > 0)) or np.any(~(ya > 0)):
        raise AnalysisError("Log-log fit needs strictly positive x and y")
    return linear_fit(np.log(xa), np.log(ya))


def log_scale_grid(s_min: int, s_max: int, count: int) -> ScaleGrid:
    """Log-spaced integer scales from s_min to s_max, duplicates removed.

    >>> log_scale_grid(16, 16384, 4).scales
    (16, 161, 1625, 16384)
    """
    if s_min < 4:
        raise ValidationError(f"s_min must be at least 4, got {s_min}")
    if s_max <= s_min:
        raise ValidationError(f"s_max ({s_max}) must exceed s_min ({s_min})")
    if count < 2:
        raise ValidationError(f"count must be at least 2, got {count}")

    raw = np.exp(np.linspace(math.log(s_min), math.log(s_max), count))
    scales = np.unique(np.rint(raw).astype(np.int64))
    if scales.size < count:
        logger.debug("scale grid deduplicated requested=%d kept=%d", count, scales.size)
    return ScaleGrid(tuple(int(s) for s in scales))


def default_scale_grid(length: int, m: int = 2, s_min: int = 16, count: int = 40) -> ScaleGrid:
    """Default grid: ``count`` log-spaced scales from s_min up to T/4."""
    s_max = length // 4
    floor = max(s_min, 2 * (m + 1))
    if s_max <= floor:
        raise ValidationError(
            f"Series of length {length} is too short for scales from {floor} to T/4"
        )
    return log_scale_grid(floor, s_max, count)


def dyadic_scale_grid(s_min: int, s_max: int) -> ScaleGrid:
    """Powers of two from s_min (rounded up) to s_max (rounded down).

    Segments on this grid line up with the blocks of a binomial cascade.

    >>> dyadic_scale_grid(16, 1000).scales
    (16, 32, 64, 128, 256, 512)
    """
    if s_min < 4:
        raise ValidationError(f"s_min must be at least 4, got {s_min}")
    low = (s_min - 1).bit_length()
    high = s_max.bit_length() - 1
    if high <= low:
        raise ValidationError(f"No two powers of two between {s_min} and {s_max}")
    return ScaleGrid(tuple(1 << j for j in range(low, high + 1)))


def central_fit_range(scales: ScaleGrid) -> tuple[float, float]:
    """Central half of the grid in log space: [s_min·r^¼, s_min·r^¾] with r = s_max/s_min."""
    log_lo = math.log(scales.s_min)
    log_span = math.log(scales.s_max) - log_lo
    lo = math.exp(log_lo + 0.25 * log_span)
    hi = math.exp(log_lo + 0.75 * log_span)
    return (lo, hi)
