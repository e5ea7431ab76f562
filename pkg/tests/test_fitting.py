"""Tests for the regression helpers and scale grids."""

import math

import numpy as np
import pytest

from dex_multifractal.errors import AnalysisError, ValidationError
from dex_multifractal.fitting import (
    central_fit_range,
    default_scale_grid,
    dyadic_scale_grid,
    linear_fit,
    log_scale_grid,
    loglog_fit,
)
from dex_multifractal.models import ScaleGrid


class TestLinearFit:
    def test_exact_line(self):
        fit = linear_fit([0.0, 1.0, 2.0, 3.0], [1.0, 3.0, 5.0, 7.0])
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.slope_stderr == pytest.approx(0.0, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0)
        assert fit.n == 4

    def test_stderr_matches_textbook(self):
        x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        y = np.array([1.1, 1.9, 3.2, 3.8, 5.1])
        fit = linear_fit(x, y)
        resid = y - (fit.intercept + fit.slope * x)
        expected = math.sqrt(np.sum(resid**2) / 3 / np.sum((x - x.mean()) ** 2))
        assert fit.slope_stderr == pytest.approx(expected)

    def test_constant_y(self):
        fit = linear_fit([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])
        assert fit.slope == 0.0
        assert fit.r2 == 1.0

    def test_too_few_points(self):
        with pytest.raises(AnalysisError, match="at least 3"):
            linear_fit([1.0, 2.0], [1.0, 2.0])

    def test_coincident_x(self):
        with pytest.raises(AnalysisError, match="coincide"):
            linear_fit([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


class TestLoglogFit:
    def test_power_law(self):
        x = np.array([16.0, 32.0, 64.0, 128.0])
        fit = loglog_fit(x, 3.0 * x**0.7)
        assert fit.slope == pytest.approx(0.7)

    def test_fit_range_selects_points(self):
        x = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
        y = np.array([100.0, 2.0, 4.0, 8.0, 1.0])
        assert loglog_fit(x, y, (2.0, 8.0)).slope == pytest.approx(1.0)

    def test_range_too_narrow(self):
        with pytest.raises(AnalysisError, match="fit range"):
            loglog_fit([1.0, 2.0, 4.0], [1.0, 2.0, 4.0], (1.5, 3.0))

    def test_non_positive(self):
        with pytest.raises(AnalysisError, match="strictly positive"):
            loglog_fit([1.0, 2.0, 4.0], [1.0, -2.0, 4.0])

    def test_length_mismatch(self):
        with pytest.raises(ValidationError, match="lengths differ"):
            loglog_fit([1.0, 2.0, 4.0], [1.0, 2.0])


class TestScaleGrids:
    """Tests for log_scale_grid and default_scale_grid."""

    def test_four_scales(self):
        assert log_scale_grid(16, 16384, 4).scales == (16, 161, 1625, 16384)

    def test_endpoints_and_uniqueness(self):
        grid = log_scale_grid(16, 100, 40)
        assert grid.s_min == 16
        assert grid.s_max == 100
        assert len(set(grid.scales)) == grid.count
        assert grid.count < 40

    def test_two_scales(self):
        assert log_scale_grid(10, 20, 2).scales == (10, 20)

    @pytest.mark.parametrize("s_min,s_max,count", [(3, 100, 10), (50, 50, 10), (16, 64, 1)])
    def test_invalid(self, s_min, s_max, count):
        with pytest.raises(ValidationError):
            log_scale_grid(s_min, s_max, count)

    def test_default_grid(self):
        grid = default_scale_grid(4096)
        assert grid.s_min == 16
        assert grid.s_max == 1024

    def test_default_grid_raises_floor_with_order(self):
        assert default_scale_grid(4096, m=4, s_min=4).s_min == 10

    def test_default_grid_too_short(self):
        with pytest.raises(ValidationError, match="too short"):
            default_scale_grid(60)


class TestCentralFitRange:
    def test_central_half(self):
        lo, hi = central_fit_range(ScaleGrid((16, 4096)))
        assert lo == pytest.approx(64.0)
        assert hi == pytest.approx(1024.0)


class TestDyadicGrid:
    """Tests for dyadic_scale_grid."""

    def test_powers_of_two(self):
        assert dyadic_scale_grid(16, 16384).scales == tuple(2**j for j in range(4, 15))

    def test_bounds_rounded_inwards(self):
        assert dyadic_scale_grid(17, 1000).scales == (32, 64, 128, 256, 512)

    @pytest.mark.parametrize("s_min,s_max", [(2, 64), (16, 31), (20, 40)])
    def test_invalid(self, s_min, s_max):
        with pytest.raises(ValidationError):
            dyadic_scale_grid(s_min, s_max)
