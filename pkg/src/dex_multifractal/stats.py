"""
Classical diagnostics: autocorrelation, CCDFs, tail fits and Pearson correlation.
"""

from __future__ import annotations

import logging
import math

import numpy as np
import numpy.typing as npt
from scipy import optimize

from .errors import AnalysisError, ValidationError
from .fitting import loglog_fit
from .models import CcdfCurve, RegularSeries, StretchedFit, TailFit

logger = logging.getLogger("dex-multifractal.stats")

MIN_TAIL_POINTS = 10
MIN_STRETCHED_POINTS = 20
DEFAULT_TAIL_QUANTILE = 0.99


def _values(data: RegularSeries | npt.ArrayLike) -> np.ndarray:
    if isinstance(data, RegularSeries):
        return data.values
    return np.asarray(data, dtype=np.float64)


def acf(series: RegularSeries | npt.ArrayLike, max_lag: int) -> np.ndarray:
    """Autocorrelation A(Δi) for Δi = 0..max_lag.

    Uses the full-sample mean and variance; the lagged products are averaged
    over the T − Δi available pairs. A(0) is exactly 1.
    """
    x = _values(series)
    n = x.size
    if max_lag < 1:
        raise ValidationError(f"max_lag must be at least 1, got {max_lag}")
    if max_lag >= n:
        raise ValidationError(f"max_lag ({max_lag}) must be smaller than the length ({n})")
    if np.ptp(x) == 0:
        raise ValidationError("ACF undefined for a zero-variance series")

    centered = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centered, size)
    raw = np.fft.irfft(spectrum * np.conj(spectrum), size)[: max_lag + 1]
    lagged = raw / (n - np.arange(max_lag + 1))
    return lagged / lagged[0]


def ccdf(values: npt.ArrayLike) -> CcdfCurve:
    """Empirical P(X > x) at each distinct sample value below the maximum.

    Ties collapse onto one point. The sample maximum has P = 0 and is left
    out, so a constant sample gives an empty curve.
    """
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = x.size
    if n < 2:
        raise ValidationError(f"CCDF needs at least 2 values, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("CCDF input contains non-finite values")
    distinct, counts = np.unique(x, return_counts=True)
    exceed = n - np.cumsum(counts)
    return CcdfCurve(x=distinct[:-1], p=exceed[:-1] / n, n=n)


def tail_threshold(values: npt.ArrayLike, quantile: float = DEFAULT_TAIL_QUANTILE) -> float:
    """Default x_min for tail fits: the given sample quantile."""
    if not 0.0 < quantile < 1.0:
        raise ValidationError(f"Tail quantile must lie in (0, 1), got {quantile}")
    return float(np.quantile(np.asarray(values, dtype=np.float64), quantile))


def fit_powerlaw_tail(curve: CcdfCurve, x_min: float) -> TailFit:
    """γ from least squares of ln P against ln x over the points with x ≥ x_min.

    Neighbouring CCDF points share most of their sample, so the regression
    residuals understate the error. The reported stderr is the sampling error
    of the log-log regression estimator on k tail points, γ·√(2/k).

    Raises:
        ValidationError: non-positive x inside the tail
        AnalysisError: fewer than 10 usable tail points, or a non-decaying tail
    """
    in_tail = curve.x >= x_min
    x = curve.x[in_tail]
    p = curve.p[in_tail]
    if x.size < MIN_TAIL_POINTS:
        raise AnalysisError(
            f"Only {x.size} CCDF points above x_min={x_min:g}, need {MIN_TAIL_POINTS}",
            stage="ccdf",
        )
    if np.any(x <= 0):
        raise ValidationError(f"Tail above x_min={x_min:g} contains non-positive x values")

    fit = loglog_fit(x, p)
    gamma = -fit.slope
    if not gamma > 0:
        raise AnalysisError(f"CCDF tail does not decay (slope {fit.slope:.4g})", stage="ccdf")
    stderr = gamma * math.sqrt(2.0 / x.size)
    logger.debug(
        "power-law tail gamma=%.4f stderr=%.4f fit_stderr=%.4g n_tail=%d",
        gamma,
        stderr,
        fit.slope_stderr,
        x.size,
    )
    return TailFit(
        gamma=gamma,
        stderr=stderr,
        x_min=float(x_min),
        n_tail=int(x.size),
        method="regression",
    )


def hill_tail(values: npt.ArrayLike, x_min: float) -> TailFit:
    """Hill estimate of γ from the sample values above x_min; stderr γ/√k."""
    sample = np.asarray(values, dtype=np.float64)
    if not x_min > 0:
        raise ValidationError(f"Hill estimator needs x_min > 0, got {x_min}")
    tail = sample[sample > x_min]
    k = tail.size
    if k < MIN_TAIL_POINTS:
        raise AnalysisError(
            f"Only {k} values above x_min={x_min:g}, need {MIN_TAIL_POINTS}", stage="ccdf"
        )
    gamma = k / float(np.sum(np.log(tail / x_min)))
    return TailFit(
        gamma=gamma,
        stderr=gamma / math.sqrt(k),
        x_min=float(x_min),
        n_tail=int(k),
        method="hill",
    )


def _stretched_model(x: np.ndarray, beta: float, log_x0: float, offset: float) -> np.ndarray:
    return -np.exp(beta * (np.log(x) - log_x0)) + offset


def fit_stretched_exp(curve: CcdfCurve) -> StretchedFit:
    """Least-squares fit of ln P(X > x) = −(x/x0)^β + c over the positive points.

    Raises:
        ValidationError: fewer than 20 points with x > 0
        AnalysisError: the optimizer did not converge
    """
    x, p = curve.positive
    if x.size < MIN_STRETCHED_POINTS:
        raise ValidationError(
            f"Stretched-exponential fit needs {MIN_STRETCHED_POINTS} positive points, "
            f"got {x.size}"
        )
    log_p = np.log(p)
    start = (1.0, float(np.log(np.median(x))), 0.0)
    try:
        params, _ = optimize.curve_fit(
            _stretched_model,
            x,
            log_p,
            p0=start,
            bounds=([1e-3, -np.inf, -np.inf], [5.0, np.inf, np.inf]),
            maxfev=20_000,
        )
    except (RuntimeError, ValueError, optimize.OptimizeWarning) as e:
        raise AnalysisError(f"Stretched-exponential fit diverged: {e}", stage="ccdf") from e

    beta, log_x0, offset = (float(v) for v in params)
    if not (math.isfinite(beta) and math.isfinite(log_x0)):
        raise AnalysisError(
            "Stretched-exponential fit returned non-finite parameters", stage="ccdf"
        )
    resid = log_p - _stretched_model(x, beta, log_x0, offset)
    return StretchedFit(
        beta=beta,
        x0=math.exp(log_x0),
        offset=offset,
        residual=float(np.sqrt(np.mean(resid**2))),
    )


def pearson(x: RegularSeries | npt.ArrayLike, y: RegularSeries | npt.ArrayLike) -> float:
    """Product-moment correlation coefficient, clipped to [−1, 1]."""
    xv = _values(x)
    yv = _values(y)
    if xv.size != yv.size:
        raise ValidationError(f"Length mismatch: {xv.size} vs {yv.size}")
    if np.ptp(xv) == 0 or np.ptp(yv) == 0:
        raise ValidationError("Pearson coefficient undefined for a zero-variance series")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    r = float(np.sum(xc * yc) / math.sqrt(float(np.sum(xc * xc)) * float(np.sum(yc * yc))))
    return min(1.0, max(-1.0, r))


def return_histogram(
    values: RegularSeries | npt.ArrayLike,
    bins: int = 201,
    value_range: tuple[float, float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Probability density of returns as (bin centers, density)."""
    data = _values(values)
    if data.size == 0:
        raise ValidationError("Histogram of an empty series")
    if bins < 1:
        raise ValidationError(f"bins must be positive, got {bins}")
    density, edges = np.histogram(data, bins=bins, range=value_range, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, density
