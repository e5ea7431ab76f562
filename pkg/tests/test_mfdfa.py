"""Tests for generalized Hurst exponents and singularity spectra."""

import numpy as np
import pytest

from dex_multifractal.detrend import fluctuation_xy, fluctuation_zz
from dex_multifractal.errors import AnalysisError, ValidationError
from dex_multifractal.fitting import default_scale_grid, dyadic_scale_grid
from dex_multifractal.mfdfa import (
    default_fit_range,
    generalized_hurst,
    singularity_spectrum,
    spectrum_metrics,
)
from dex_multifractal.models import CascadeParams, HurstCurve, QGrid, ScaleGrid, Spectrum
from dex_multifractal.synth import analytic_cascade_hq, binomial_cascade, fgn

T = 2**16


def analyze(values, q=None, fit_range=None):
    grid = q or QGrid.default()
    surface = fluctuation_zz(values, grid, default_scale_grid(len(values)))
    return generalized_hurst(surface, fit_range)


@pytest.fixture(scope="module")
def cascade_hq():
    # Dyadic scales line the segments up with the cascade blocks.
    cascade = binomial_cascade(CascadeParams(levels=16, p=0.75))
    surface = fluctuation_zz(cascade, QGrid.default(), dyadic_scale_grid(16, 2**14))
    return generalized_hurst(surface)


def linear_curve(a=0.7, b=0.05):
    q = QGrid.default().values
    return HurstCurve(q=q, h=a - b * q, stderr=np.zeros_like(q), fit_range=(16.0, 256.0))


class TestGeneralizedHurst:
    """Tests for generalized_hurst."""

    @pytest.mark.parametrize("hurst", [0.3, 0.7])
    def test_fgn_hurst(self, hurst):
        curve = analyze(fgn(hurst, T, seed=3), q=QGrid.from_spec("1,2,3"))
        assert curve.H == pytest.approx(hurst, abs=0.05)

    @pytest.mark.parametrize("hurst", [0.3, 0.5, 0.7])
    def test_fgn_hurst_seed_mean(self, hurst):
        q = QGrid.from_spec("2")
        estimates = [analyze(fgn(hurst, T, seed=seed), q=q).H for seed in range(10)]
        assert np.mean(estimates) == pytest.approx(hurst, abs=0.05)

    def test_cascade_against_closed_form(self, cascade_hq):
        for q in (1.0, 2.0, 3.0, 4.0):
            assert cascade_hq.at(q) == pytest.approx(analytic_cascade_hq(0.75, q), abs=0.05)

    def test_cascade_negative_q(self, cascade_hq):
        for q in cascade_hq.q[cascade_hq.q < 1.0]:
            assert cascade_hq.at(q) == pytest.approx(analytic_cascade_hq(0.75, q), abs=0.10)

    def test_cascade_offset_uniform(self, cascade_hq):
        # Block-aligned segments leave one scale bias shared by every q.
        analytic = np.array([analytic_cascade_hq(0.75, q) for q in cascade_hq.q])
        assert np.ptp(cascade_hq.h - analytic) < 1e-4

    def test_cascade_hurst(self, cascade_hq):
        assert cascade_hq.H == pytest.approx(0.839, abs=0.05)

    def test_cascade_non_increasing(self, cascade_hq):
        assert np.all(np.diff(cascade_hq.h) <= 0.01)

    def test_affine_invariance(self):
        values = fgn(0.6, 2**12, seed=1).values
        base = analyze(values)
        shifted = analyze(3.5 * values - 2.0)
        np.testing.assert_allclose(shifted.h, base.h, atol=1e-9)

    def test_fit_range_recorded(self):
        values = np.random.default_rng(0).normal(size=4096)
        scales = default_scale_grid(values.size)
        surface = fluctuation_zz(values, QGrid.from_spec("2"), scales)
        assert generalized_hurst(surface).fit_range == pytest.approx(default_fit_range(scales))
        assert generalized_hurst(surface, (16, 1024)).fit_range == (16.0, 1024.0)

    def test_narrow_fit_range(self):
        values = np.random.default_rng(0).normal(size=4096)
        surface = fluctuation_zz(values, QGrid.from_spec("2"), default_scale_grid(values.size))
        with pytest.raises(AnalysisError, match="usable scales"):
            generalized_hurst(surface, (16, 20))

    def test_signed_surface_rejected(self):
        values = np.random.default_rng(0).normal(size=1024)
        surface = fluctuation_xy(values, values, QGrid.from_spec("2"), ScaleGrid((8, 16, 32)))
        with pytest.raises(ValidationError, match="unsigned"):
            generalized_hurst(surface)


class TestSingularitySpectrum:
    """Tests for singularity_spectrum and spectrum_metrics."""

    def test_linear_h(self):
        curve = linear_curve(a=0.7, b=0.05)
        spec = singularity_spectrum(curve)
        np.testing.assert_allclose(spec.alpha, 0.7 - 0.1 * curve.q, atol=1e-12)
        np.testing.assert_allclose(spec.f_alpha, 1.0 - 0.05 * curve.q**2, atol=1e-12)

    def test_apex_at_q0(self, cascade_hq):
        spec = singularity_spectrum(cascade_hq)
        i = int(np.flatnonzero(spec.q == 0.0)[0])
        assert spec.f_alpha[i] == pytest.approx(1.0, abs=0.02)

    def test_symmetric_metrics(self):
        width, asymmetry = spectrum_metrics(singularity_spectrum(linear_curve(b=0.05)))
        assert width == pytest.approx(0.8)
        assert asymmetry == pytest.approx(0.0, abs=1e-9)

    def test_cascade_width(self, cascade_hq):
        width, _ = spectrum_metrics(singularity_spectrum(cascade_hq))
        assert width > 0.6

    def test_white_noise_narrow(self):
        widths = []
        for seed in range(5):
            values = np.random.default_rng(100 + seed).normal(size=T)
            curve = analyze(values, fit_range=(32, 2048))
            widths.append(spectrum_metrics(singularity_spectrum(curve))[0])
        assert np.mean(widths) < 0.15

    @pytest.mark.parametrize("spec", ["-4:4:0.2", "-2:2:0.1", "-3:3:0.3"])
    def test_degenerate(self, spec):
        q = QGrid.from_spec(spec).values
        flat = HurstCurve(q=q, h=np.full(q.size, 0.5), stderr=np.zeros_like(q), fit_range=(1, 2))
        with pytest.raises(AnalysisError, match="Degenerate"):
            spectrum_metrics(singularity_spectrum(flat))

    def test_too_few_q(self):
        curve = HurstCurve(np.array([1.0, 2.0]), np.array([0.6, 0.5]), np.zeros(2), (1, 2))
        with pytest.raises(ValidationError, match="at least 5"):
            singularity_spectrum(curve)

    def test_metrics_sign(self):
        spec = Spectrum(
            q=np.arange(5.0),
            alpha=np.array([1.0, 0.9, 0.8, 0.7, 0.2]),
            f_alpha=np.array([0.5, 0.9, 1.0, 0.9, 0.5]),
        )
        width, asymmetry = spectrum_metrics(spec)
        assert width == pytest.approx(0.8)
        # apex at α = 0.8: left arm 0.6, right arm 0.2
        assert asymmetry == pytest.approx(0.5)
