"""
Cross-correlation scaling for pairs of series.

- λ(q): scaling exponent of the signed fluctuation function F_XY(q, s)
- h_xy(q): mean of the two series' generalized Hurst exponents, the
  benchmark λ(q) is compared with
- ρ(q, s): detrended cross-correlation coefficient F_XY / √(F_XX·F_YY)
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from .detrend import fluctuation_xy, fluctuation_zz
from .errors import AnalysisError, ValidationError
from .fitting import loglog_fit
from .mfdfa import fit_scales
from .models import (
    FluctuationSurface,
    HurstCurve,
    LambdaCurve,
    QGrid,
    RegularSeries,
    RhoSurface,
    ScaleGrid,
)
from .series import check_aligned

logger = logging.getLogger("dex-multifractal.mfcca")


def _sign_label(row: np.ndarray) -> str:
    if np.all(row > 0):
        return "+"
    if np.all(row < 0):
        return "-"
    if np.all(row == 0):
        return "zero"
    return "mixed"


def lambda_exponent(
    surface: FluctuationSurface,
    fit_range: Sequence[float] | None = None,
    positive_only: bool = True,
) -> LambdaCurve:
    """λ(q) from the slope of ln|F_XY| against ln s.

    A q enters the curve only when F_XY keeps one sign over the whole fit
    range; a uniformly negative row is fitted as −F_XY. Rows with mixed
    signs are left out and listed in ``excluded``. By default only q > 0 is
    considered.

    Raises:
        ValidationError: the surface is unsigned
        AnalysisError: no q has a uniform sign
    """
    if not surface.signed:
        raise ValidationError("lambda_exponent needs a signed (cross) fluctuation surface")
    mask, bounds = fit_scales(surface, fit_range)
    s = surface.scales.as_array()[mask]

    q_kept: list[float] = []
    lam: list[float] = []
    stderr: list[float] = []
    sign_profile: dict[float, str] = {}
    excluded: dict[float, str] = {}
    for i, q in enumerate(surface.q_grid.values):
        q = float(q)
        if positive_only and q <= 0:
            continue
        row = surface.F[i, mask]
        label = _sign_label(row) if np.all(np.isfinite(row)) else "undefined"
        sign_profile[q] = label
        if label not in ("+", "-"):
            excluded[q] = f"{label} sign across fit range"
            continue
        fit = loglog_fit(s, row if label == "+" else -row)
        q_kept.append(q)
        lam.append(fit.slope)
        stderr.append(fit.slope_stderr)

    if excluded:
        logger.warning(
            "q values excluded from lambda count=%d q=%s",
            len(excluded),
            ",".join(f"{q:g}" for q in excluded),
        )
    if not q_kept:
        raise AnalysisError("No q has a uniform F_XY sign over the fit range", stage="mfcca")
    return LambdaCurve(
        q=np.array(q_kept),
        lam=np.array(lam),
        stderr=np.array(stderr),
        fit_range=bounds,
        sign_profile=sign_profile,
        excluded=excluded,
    )


def avg_hurst(hx: HurstCurve, hy: HurstCurve) -> HurstCurve:
    """Pointwise mean (h_x + h_y)/2 with stderr ½·√(σx² + σy²)."""
    if hx.q.shape != hy.q.shape or not np.allclose(hx.q, hy.q, rtol=0, atol=1e-12):
        raise ValidationError("avg_hurst needs both curves on the same q grid")
    assert hx.r2 is not None and hy.r2 is not None
    return HurstCurve(
        q=hx.q,
        h=(hx.h + hy.h) / 2.0,
        stderr=0.5 * np.sqrt(hx.stderr**2 + hy.stderr**2),
        fit_range=hx.fit_range,
        r2=np.minimum(hx.r2, hy.r2),
    )


def cross_gap(lam: LambdaCurve, hxy: HurstCurve) -> tuple[np.ndarray, np.ndarray]:
    """λ(q) − h_xy(q) on the q values both curves share."""
    q_out: list[float] = []
    gap: list[float] = []
    for q, value in zip(lam.q, lam.lam):
        hits = np.flatnonzero(np.isclose(hxy.q, q, rtol=0, atol=1e-9))
        if hits.size:
            q_out.append(float(q))
            gap.append(float(value - hxy.h[hits[0]]))
    return np.array(q_out), np.array(gap)


def rho_from_surfaces(
    fxy: FluctuationSurface,
    fxx: FluctuationSurface,
    fyy: FluctuationSurface,
    q: float,
) -> RhoSurface:
    """ρ(q, s) = F_XY / √(F_XX·F_YY) at every scale; the sign comes from F_XY.

    Scales with a vanishing or undefined denominator get NaN and are flagged.
    """
    if not (fxy.scales == fxx.scales == fyy.scales):
        raise ValidationError("Fluctuation surfaces use different scale grids")
    numerator = fxy.row(q)
    denominator = np.sqrt(fxx.row(q) * fyy.row(q))
    valid = np.isfinite(numerator) & np.isfinite(denominator) & (denominator > 0)
    values = np.full(numerator.shape, np.nan)
    values[valid] = numerator[valid] / denominator[valid]
    flagged = tuple(int(s) for s, ok in zip(fxy.scales.scales, valid) if not ok)
    if flagged:
        logger.warning("rho undefined q=%g scales=%s", q, ",".join(map(str, flagged)))
    if math.isclose(q, 2.0):
        # Cauchy-Schwarz bounds |ρ(2, s)| by 1; clip rounding overshoot.
        values = np.where(valid, np.clip(values, -1.0, 1.0), values)
    return RhoSurface(q=float(q), scales=fxy.scales, rho=values, flagged=flagged)


def rho_surfaces(
    x: RegularSeries | npt.ArrayLike,
    y: RegularSeries | npt.ArrayLike,
    q_values: Sequence[float],
    scales: ScaleGrid,
    m: int = 2,
    workers: int = 1,
) -> list[RhoSurface]:
    """ρ(q, s) for several q, sharing one set of fluctuation surfaces."""
    if isinstance(x, RegularSeries) and isinstance(y, RegularSeries):
        check_aligned(x, y)
    grid = QGrid(np.unique(np.append(np.asarray(q_values, dtype=np.float64), 2.0)))
    fxy = fluctuation_xy(x, y, grid, scales, m, workers=workers)
    fxx = fluctuation_zz(x, grid, scales, m, workers=workers)
    fyy = fluctuation_zz(y, grid, scales, m, workers=workers)
    return [rho_from_surfaces(fxy, fxx, fyy, q) for q in q_values]


def rho(
    x: RegularSeries | npt.ArrayLike,
    y: RegularSeries | npt.ArrayLike,
    q: float,
    scales: ScaleGrid,
    m: int = 2,
    workers: int = 1,
) -> RhoSurface:
    """Detrended cross-correlation coefficient ρ(q, s) of two aligned series."""
    return rho_surfaces(x, y, [q], scales, m, workers=workers)[0]
