"""Tests for the synthetic generators and their closed-form exponents."""

import math

import numpy as np
import pytest

from dex_multifractal import synth
from dex_multifractal.errors import AnalysisError, ValidationError
from dex_multifractal.models import CascadeParams, SeriesKind
from dex_multifractal.stats import acf
from dex_multifractal.synth import (
    analytic_cascade_hq,
    ar1,
    binomial_cascade,
    cascade_weights,
    fgn,
    pareto_sample,
)


class TestCascade:
    """Tests for the binomial cascade."""

    def test_two_levels(self):
        np.testing.assert_allclose(cascade_weights(2, 0.75), [0.5625, 0.1875, 0.1875, 0.0625])

    def test_weights_follow_bit_count(self):
        weights = cascade_weights(10, 0.7)
        k = 0b1011001110
        assert weights[k] == pytest.approx(0.7**4 * 0.3**6)

    def test_measure_sums_to_one(self):
        series = binomial_cascade(CascadeParams(levels=12, p=0.75))
        assert len(series) == 4096
        assert series.values.sum() == pytest.approx(1.0)
        assert series.kind == SeriesKind.VOLUME
        assert series.attrs["p"] == 0.75

    def test_deterministic(self):
        a = binomial_cascade(CascadeParams(levels=10, p=0.6))
        b = binomial_cascade(CascadeParams(levels=10, p=0.6))
        assert a.values.tobytes() == b.values.tobytes()


class TestAnalyticHq:
    """Tests for analytic_cascade_hq."""

    def test_q2(self):
        assert analytic_cascade_hq(0.75, 2.0) == pytest.approx(0.839036, abs=1e-6)

    def test_q0_limit(self):
        expected = -math.log2(0.75 * 0.25) / 2.0
        assert analytic_cascade_hq(0.75, 0.0) == pytest.approx(expected, abs=1e-12)

    def test_continuous_through_zero(self):
        inside = analytic_cascade_hq(0.75, 9e-4)
        outside = analytic_cascade_hq(0.75, 1.1e-3)
        assert inside == pytest.approx(outside, abs=1e-4)
        assert analytic_cascade_hq(0.75, -5e-4) > analytic_cascade_hq(0.75, 5e-4)

    def test_monotone_decreasing(self):
        q = np.linspace(-4, 4, 81)
        h = np.array([analytic_cascade_hq(0.75, v) for v in q])
        assert np.all(np.diff(h) < 0)
        assert h[0] == pytest.approx((1.0 - math.log2(0.75**-4 + 0.25**-4)) / -4.0)

    def test_invalid_p(self):
        with pytest.raises(ValidationError):
            analytic_cascade_hq(0.4, 2.0)


class TestFgn:
    """Tests for fractional Gaussian noise."""

    def test_white_case(self):
        series = fgn(0.5, 2**14, seed=2)
        assert abs(acf(series, 1)[1]) < 4.0 / math.sqrt(len(series))

    @pytest.mark.parametrize("hurst", [0.3, 0.5, 0.7])
    def test_unit_variance(self, hurst):
        values = fgn(hurst, 2**14, seed=5).values
        assert np.var(values) == pytest.approx(1.0, rel=0.05)

    def test_lag_one_correlation(self):
        values = fgn(0.7, 2**16, seed=6).values
        expected = 0.5 * (2**1.4 - 2.0)
        assert acf(values, 1)[1] == pytest.approx(expected, abs=0.02)

    def test_deterministic_per_seed(self):
        a = fgn(0.7, 1024, seed=9)
        b = fgn(0.7, 1024, seed=9)
        c = fgn(0.7, 1024, seed=10)
        assert a.values.tobytes() == b.values.tobytes()
        assert not np.array_equal(a.values, c.values)

    @pytest.mark.parametrize("hurst,length", [(0.0, 1024), (1.0, 1024), (0.7, 1000), (0.7, 512)])
    def test_invalid(self, hurst, length):
        with pytest.raises(ValidationError):
            fgn(hurst, length)

    def test_indefinite_embedding(self, monkeypatch):
        monkeypatch.setattr(
            synth, "_circulant_eigenvalues", lambda hurst, half: np.array([1.0, -1.0, 1.0, 1.0])
        )
        with pytest.raises(AnalysisError, match="indefinite"):
            fgn(0.7, 1024)


class TestOtherGenerators:
    def test_pareto_support(self):
        sample = pareto_sample(3.0, 1000, seed=1, x_min=2.0)
        assert sample.min() >= 2.0

    def test_pareto_invalid(self):
        with pytest.raises(ValidationError):
            pareto_sample(0.0, 10)

    def test_ar1_correlation(self):
        series = ar1(0.6, 50_000, seed=4)
        assert acf(series, 1)[1] == pytest.approx(0.6, abs=0.02)

    def test_ar1_invalid(self):
        with pytest.raises(ValidationError):
            ar1(1.0, 100)
