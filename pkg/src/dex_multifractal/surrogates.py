"""
Surrogate series for significance testing.

- shuffle: random permutation; keeps the value distribution, destroys
  every temporal correlation
- fourier: random Fourier phases; keeps the power spectrum (linear
  correlations), destroys nonlinear structure and pushes the distribution
  towards a Gaussian

Each (seed, replicate_index) pair drives its own random stream, see
SurrogateSpec.rng.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .detrend import fluctuation_zz
from .errors import ValidationError
from .mfdfa import generalized_hurst, singularity_spectrum
from .models import QGrid, RegularSeries, ScaleGrid, Spectrum, SurrogateKind, SurrogateSpec

logger = logging.getLogger("dex-multifractal.surrogates")

DEFAULT_REPLICATES = 10


def _tagged(series: RegularSeries, values: np.ndarray, spec: SurrogateSpec) -> RegularSeries:
    attrs = dict(series.attrs)
    attrs["surrogate"] = spec.to_dict()
    name = f"{series.label}~{spec.kind.value}{spec.replicate_index}"
    return series.with_values(values, name=name, attrs=attrs)


def shuffle_surrogate(series: RegularSeries, spec: SurrogateSpec) -> RegularSeries:
    """Uniformly random permutation of the values."""
    if len(series) < 2:
        raise ValidationError(f"Cannot shuffle {series.label}: fewer than 2 values")
    return _tagged(series, spec.rng().permutation(series.values), spec)


def fourier_surrogate(series: RegularSeries, spec: SurrogateSpec) -> RegularSeries:
    """Phase-randomized copy with the same amplitude spectrum.

    The zero-frequency bin and, for even lengths, the Nyquist bin keep their
    (real) values; every other positive-frequency bin gets an independent
    uniform phase. The real inverse transform enforces conjugate symmetry.
    """
    n = len(series)
    if n < 4:
        raise ValidationError(f"Fourier surrogate of {series.label} needs at least 4 values")
    spectrum = np.fft.rfft(series.values)
    phases = spec.rng().uniform(0.0, 2.0 * np.pi, spectrum.size)
    phases[0] = 0.0
    if n % 2 == 0:
        phases[-1] = 0.0
    values = np.fft.irfft(spectrum * np.exp(1j * phases), n)
    return _tagged(series, values, spec)


_GENERATORS = {
    SurrogateKind.SHUFFLE: shuffle_surrogate,
    SurrogateKind.FOURIER: fourier_surrogate,
}


def make_surrogate(series: RegularSeries, spec: SurrogateSpec) -> RegularSeries:
    return _GENERATORS[spec.kind](series, spec)


def surrogate_spectrum(
    series: RegularSeries,
    kind: SurrogateKind | str,
    q: QGrid,
    scales: ScaleGrid,
    m: int = 2,
    fit_range: Sequence[float] | None = None,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    workers: int = 1,
) -> Spectrum:
    """f(α) of surrogates averaged pointwise over replicates at matching q."""
    if isinstance(kind, str):
        kind = SurrogateKind.from_string(kind)
    if replicates < 1:
        raise ValidationError(f"replicates must be positive, got {replicates}")

    def one_replicate(index: int) -> Spectrum:
        spec = SurrogateSpec(kind=kind, seed=seed, replicate_index=index)
        surface = fluctuation_zz(make_surrogate(series, spec), q, scales, m)
        return singularity_spectrum(generalized_hurst(surface, fit_range))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            spectra = list(pool.map(one_replicate, range(replicates)))
    else:
        spectra = [one_replicate(i) for i in range(replicates)]

    averaged = Spectrum(
        q=q.values,
        alpha=np.mean([s.alpha for s in spectra], axis=0),
        f_alpha=np.mean([s.f_alpha for s in spectra], axis=0),
    )
    logger.info(
        "surrogate spectrum series=%s kind=%s replicates=%d width=%.4f",
        series.label,
        kind.value,
        replicates,
        averaged.width,
    )
    return averaged
