"""
Synthetic series with known scaling, and their analytic exponents.

- binomial_cascade: deterministic multiplicative measure, multifractal
  with h(q) given by analytic_cascade_hq
- fgn: fractional Gaussian noise (monofractal, h(q) = H) by circulant
  embedding of its exact autocovariance
- pareto_sample / ar1: heavy-tailed and linearly correlated test inputs
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy import signal

from .errors import AnalysisError, ValidationError
from .models import CascadeParams, RegularSeries, SeriesKind

logger = logging.getLogger("dex-multifractal.synth")

DEFAULT_DT_MS = 300_000
MIN_FGN_LENGTH = 2**10

# Below this |q| the closed form loses digits to cancellation; a Taylor
# expansion is used instead.
_SMALL_Q = 1e-3


def cascade_weights(levels: int, p: float) -> np.ndarray:
    """p^(n−b(k))·(1−p)^b(k) for k < 2^n, with b(k) the number of 1-bits of k."""
    if levels < 1:
        raise ValidationError(f"levels must be positive, got {levels}")
    index = np.arange(2**levels, dtype=np.int64)
    ones = np.zeros(index.size, dtype=np.int64)
    for bit in range(levels):
        ones += (index >> bit) & 1
    return p ** (levels - ones) * (1.0 - p) ** ones


def binomial_cascade(params: CascadeParams) -> RegularSeries:
    """The binomial multifractal measure on 2^levels points as a series."""
    values = cascade_weights(params.levels, params.p)
    return RegularSeries(
        values=values,
        start_ms=0,
        dt_ms=DEFAULT_DT_MS,
        kind=SeriesKind.VOLUME,
        name=f"cascade(levels={params.levels},p={params.p:g})",
        attrs={"generator": "cascade", "levels": params.levels, "p": params.p},
    )


def analytic_cascade_hq(p: float, q: float) -> float:
    """Generalized Hurst exponent of the binomial cascade.

    h(q) = (1 − log₂(p^q + (1−p)^q)) / q, continued through q = 0 by its
    limit −log₂(p(1−p))/2.
    """
    if not 0.5 < p < 1.0:
        raise ValidationError(f"p must lie in (0.5, 1), got {p}")
    if abs(q) < _SMALL_Q:
        a = math.log(p)
        b = math.log(1.0 - p)
        # The third-order term vanishes: ln(p^q + (1-p)^q) has no cubic term.
        return -(a + b) / (2.0 * math.log(2.0)) - q * (a - b) ** 2 / (8.0 * math.log(2.0))
    return (1.0 - math.log2(p**q + (1.0 - p) ** q)) / q


def _fgn_autocovariance(hurst: float, lags: np.ndarray) -> np.ndarray:
    k = lags.astype(np.float64)
    two_h = 2.0 * hurst
    return 0.5 * (np.abs(k - 1) ** two_h - 2.0 * np.abs(k) ** two_h + np.abs(k + 1) ** two_h)


def _circulant_eigenvalues(hurst: float, half: int) -> np.ndarray:
    """Eigenvalues of the 2·half circulant embedding of the fGn covariance."""
    gamma = _fgn_autocovariance(hurst, np.arange(half + 1))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    return np.fft.fft(row).real


def fgn(hurst: float, length: int, seed: int = 0) -> RegularSeries:
    """Fractional Gaussian noise with unit variance.

    Circulant embedding of size 2·length; when that embedding is not
    non-negative definite it is retried once at double size.

    Raises:
        ValidationError: H outside (0, 1) or length not a power of two ≥ 2^10
        AnalysisError: the embedding stays indefinite after the retry
    """
    if not 0.0 < hurst < 1.0:
        raise ValidationError(f"H must lie in (0, 1), got {hurst}")
    if length < MIN_FGN_LENGTH or length & (length - 1):
        raise ValidationError(f"length must be a power of two ≥ {MIN_FGN_LENGTH}, got {length}")

    half = length
    for attempt in range(2):
        eigenvalues = _circulant_eigenvalues(hurst, half)
        if eigenvalues.min() >= -1e-10 * eigenvalues.max():
            break
        logger.warning(
            "circulant embedding not positive definite H=%g size=%d attempt=%d",
            hurst,
            2 * half,
            attempt + 1,
        )
        half *= 2
    else:
        raise AnalysisError(
            f"Circulant embedding for H={hurst} stays indefinite at size {half}", stage="synth"
        )

    size = eigenvalues.size
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    weights = np.sqrt(np.clip(eigenvalues, 0.0, None) / size)
    values = np.fft.fft(weights * noise).real[:length]
    return RegularSeries(
        values=values,
        start_ms=0,
        dt_ms=DEFAULT_DT_MS,
        kind=SeriesKind.LOG_RETURN,
        name=f"fgn(H={hurst:g})",
        attrs={"generator": "fgn", "H": hurst, "seed": seed},
    )


def pareto_sample(gamma: float, size: int, seed: int = 0, x_min: float = 1.0) -> np.ndarray:
    """Draws with P(X > x) = (x / x_min)^−γ for x ≥ x_min."""
    if gamma <= 0 or x_min <= 0:
        raise ValidationError("Pareto sample needs gamma > 0 and x_min > 0")
    rng = np.random.default_rng(seed)
    return x_min * (1.0 + rng.pareto(gamma, size))


def ar1(phi: float, length: int, seed: int = 0) -> RegularSeries:
    """Stationary Gaussian AR(1): x[t] = φ·x[t−1] + ε[t], unit innovations."""
    if not -1.0 < phi < 1.0:
        raise ValidationError(f"AR(1) needs |phi| < 1, got {phi}")
    if length < 2:
        raise ValidationError(f"length must be at least 2, got {length}")
    rng = np.random.default_rng(seed)
    start = rng.standard_normal() / math.sqrt(1.0 - phi**2)
    innovations = rng.standard_normal(length)
    values, _ = signal.lfilter([1.0], [1.0, -phi], innovations, zi=[phi * start])
    return RegularSeries(
        values=values,
        start_ms=0,
        dt_ms=DEFAULT_DT_MS,
        kind=SeriesKind.LOG_RETURN,
        name=f"ar1(phi={phi:g})",
        attrs={"generator": "ar1", "phi": phi, "seed": seed},
    )
