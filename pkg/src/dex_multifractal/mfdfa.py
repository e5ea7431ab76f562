"""
Single-series multifractal analysis: h(q), f(α) and spectrum shape.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from .errors import AnalysisError, ValidationError
from .fitting import central_fit_range, loglog_fit
from .models import FluctuationSurface, HurstCurve, ScaleGrid, Spectrum

logger = logging.getLogger("dex-multifractal.mfdfa")

MIN_FIT_SCALES = 5
MIN_SPECTRUM_POINTS = 5
# f(α) may exceed 1 through regression noise; beyond this it is reported.
APEX_SLACK = 0.05
# dh/dq below this is rounding noise from the q grid.
SLOPE_ATOL = 1e-12
# Spectra narrower than this, relative to the apex α, count as a single point.
DEGENERATE_RTOL = 1e-9


def default_fit_range(scales: ScaleGrid) -> tuple[float, float]:
    """Central half of the scale grid in log space."""
    return central_fit_range(scales)


def fit_scales(
    surface: FluctuationSurface, fit_range: Sequence[float] | None
) -> tuple[np.ndarray, tuple[float, float]]:
    """Boolean mask of the usable scales inside the fit range, and the range itself."""
    lo, hi = default_fit_range(surface.scales) if fit_range is None else fit_range
    s = surface.scales.as_array()
    mask = (s >= lo) & (s <= hi)
    unusable = surface.unusable_scales
    if unusable:
        mask &= ~np.isin(surface.scales.scales, unusable)
    inside = int(np.count_nonzero(mask))
    if inside < MIN_FIT_SCALES:
        raise AnalysisError(
            f"Only {inside} usable scales in fit range [{lo:g}, {hi:g}], need {MIN_FIT_SCALES}",
            stage="mfdfa",
        )
    return mask, (float(lo), float(hi))


def generalized_hurst(
    surface: FluctuationSurface, fit_range: Sequence[float] | None = None
) -> HurstCurve:
    """h(q): slope of ln F(q, s) against ln s over the fit range, per q.

    Scales flagged unusable by the fluctuation stage are left out.

    Raises:
        ValidationError: the surface is signed
        AnalysisError: too few scales in range, or non-positive F values
    """
    if surface.signed:
        raise ValidationError("generalized_hurst needs an unsigned fluctuation surface")
    mask, bounds = fit_scales(surface, fit_range)
    s = surface.scales.as_array()[mask]

    q_values = surface.q_grid.values
    h = np.empty(q_values.size)
    stderr = np.empty(q_values.size)
    r2 = np.empty(q_values.size)
    for i, q in enumerate(q_values):
        row = surface.F[i, mask]
        if not np.all(row > 0):
            raise AnalysisError(f"Non-positive fluctuation values at q={q:g}", stage="mfdfa")
        fit = loglog_fit(s, row)
        h[i], stderr[i], r2[i] = fit.slope, fit.slope_stderr, fit.r2

    curve = HurstCurve(q=q_values, h=h, stderr=stderr, fit_range=bounds, r2=r2)
    logger.info(
        "generalized hurst H=%s min_r2=%.4f fit_range=%g..%g",
        f"{curve.H:.4f}" if curve.H is not None else "n/a",
        curve.min_r2,
        *bounds,
    )
    return curve


def singularity_spectrum(h: HurstCurve) -> Spectrum:
    """α = h + q·dh/dq and f(α) = q(α − h) + 1, listed in q order.

    dh/dq uses central differences inside the grid and one-sided
    differences at both ends.
    """
    if len(h) < MIN_SPECTRUM_POINTS:
        raise ValidationError(
            f"Spectrum needs h(q) on at least {MIN_SPECTRUM_POINTS} q values, got {len(h)}"
        )
    slope = np.gradient(h.h, h.q, edge_order=1)
    if not np.all(np.isfinite(slope)):
        raise AnalysisError("Non-finite dh/dq", stage="mfdfa")
    slope[np.abs(slope) < SLOPE_ATOL] = 0.0
    alpha = h.h + h.q * slope
    f_alpha = h.q * (alpha - h.h) + 1.0
    spectrum = Spectrum(q=h.q, alpha=alpha, f_alpha=f_alpha)
    if f_alpha.max() > 1.0 + APEX_SLACK:
        logger.warning("spectrum exceeds unit apex max_f=%.4f", f_alpha.max())
    return spectrum


def spectrum_metrics(spec: Spectrum) -> tuple[float, float]:
    """Width Δα and asymmetry (ΔL − ΔR)/(ΔL + ΔR) about the apex.

    ΔL is the extent of the arm at α below the apex α, ΔR the arm above.
    Positive asymmetry means a longer left arm.
    """
    if len(spec) < 3:
        raise ValidationError(f"Spectrum metrics need at least 3 points, got {len(spec)}")
    apex_alpha = spec.alpha[spec.apex_index]
    left = float(apex_alpha - spec.alpha.min())
    right = float(spec.alpha.max() - apex_alpha)
    if left + right <= DEGENERATE_RTOL * max(1.0, abs(float(apex_alpha))):
        raise AnalysisError("Degenerate spectrum: all α coincide", stage="mfdfa")
    return spec.width, (left - right) / (left + right)
