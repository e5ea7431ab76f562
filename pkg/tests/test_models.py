"""Tests for dex-multifractal models."""

import numpy as np
import pytest

from dex_multifractal.errors import ValidationError
from dex_multifractal.models import (
    AggregationReport,
    CascadeParams,
    CcdfCurve,
    Dialect,
    FluctuationSurface,
    HurstCurve,
    QGrid,
    RegularSeries,
    RhoSurface,
    ScaleGrid,
    SeriesKind,
    Spectrum,
    SurrogateKind,
    SurrogateSpec,
    TickRecord,
    TickSeries,
)


class TestEnums:
    """Tests for the string parsing of enums."""

    def test_dialect_from_string(self):
        assert Dialect.from_string("generic") == Dialect.GENERIC
        assert Dialect.from_string("Binance-AggTrades") == Dialect.BINANCE_AGGTRADES

    def test_dialect_unknown(self):
        with pytest.raises(ValidationError, match="Unknown dialect"):
            Dialect.from_string("kraken")

    def test_series_kind_aliases(self):
        assert SeriesKind.from_string("returns") == SeriesKind.LOG_RETURN
        assert SeriesKind.from_string("log-return") == SeriesKind.LOG_RETURN
        assert SeriesKind.from_string("abs") == SeriesKind.VOLATILITY
        assert SeriesKind.from_string("VOLUME") == SeriesKind.VOLUME

    def test_surrogate_kind(self):
        assert SurrogateKind.from_string(" Fourier ") == SurrogateKind.FOURIER
        with pytest.raises(ValidationError):
            SurrogateKind.from_string("iaaft")


class TestTicks:
    """Tests for TickRecord and TickSeries."""

    def test_record_rejects_non_positive_price(self):
        with pytest.raises(ValidationError, match="Non-positive price"):
            TickRecord(0, 0.0, 1.0)

    def test_record_rejects_negative_volume(self):
        with pytest.raises(ValidationError, match="Negative volume"):
            TickRecord(0, 1.0, -1.0)

    def test_from_records_sorts_stably(self):
        records = [
            TickRecord(2000, 3.0, 1.0),
            TickRecord(1000, 1.0, 1.0),
            TickRecord(1000, 2.0, 1.0),
        ]
        ticks = TickSeries.from_records("p", records)
        assert ticks.timestamps_ms.tolist() == [1000, 1000, 2000]
        assert ticks.prices.tolist() == [1.0, 2.0, 3.0]

    def test_unsorted_columns_rejected(self):
        with pytest.raises(ValidationError, match="not sorted"):
            TickSeries("p", np.array([2, 1]), np.array([1.0, 1.0]), np.array([1.0, 1.0]))

    def test_columns_are_read_only(self):
        ticks = TickSeries("p", np.array([1, 2]), np.array([1.0, 2.0]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            ticks.prices[0] = 5.0

    def test_empty_series_allowed(self):
        ticks = TickSeries("p", np.array([], dtype=np.int64), np.array([]), np.array([]))
        assert ticks.is_empty
        assert len(ticks) == 0

    def test_records_round_trip(self):
        records = [TickRecord(0, 100.0, 5.0), TickRecord(12000, 101.0, 6.0)]
        ticks = TickSeries.from_records("p", records)
        assert ticks.records == records

    def test_take_keeps_order_and_renames(self):
        ticks = TickSeries("p", np.array([1, 2, 3]), np.ones(3), np.array([1.0, 2.0, 3.0]))
        sub = ticks.take(np.array([True, False, True]), pair_id="q")
        assert sub.pair_id == "q"
        assert sub.volumes_usd.tolist() == [1.0, 3.0]


class TestRegularSeries:
    """Tests for RegularSeries."""

    def test_volume_must_be_non_negative(self):
        with pytest.raises(ValidationError, match="negatives"):
            RegularSeries(np.array([1.0, -1.0]), 0, 1000, SeriesKind.VOLUME)

    def test_normalized_volume_may_be_negative(self):
        series = RegularSeries(np.array([1.0, -1.0]), 0, 1000, SeriesKind.VOLUME, normalized=True)
        assert len(series) == 2

    def test_surrogate_volume_may_be_negative(self):
        series = RegularSeries(
            np.array([1.0, -1.0]), 0, 1000, SeriesKind.VOLUME, attrs={"surrogate": {}}
        )
        assert series.values[1] == -1.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError, match="non-finite"):
            RegularSeries(np.array([1.0, np.nan]), 0, 1000, SeriesKind.LOG_RETURN)

    def test_rejects_bad_interval(self):
        with pytest.raises(ValidationError, match="dt_ms"):
            RegularSeries(np.array([1.0, 2.0]), 0, 0, SeriesKind.LOG_RETURN)

    def test_end_ms_and_label(self):
        series = RegularSeries(np.zeros(4), 600, 300, SeriesKind.LOG_RETURN)
        assert series.end_ms == 1800
        assert series.label == "log_return"

    def test_with_values_copies(self):
        series = RegularSeries(np.zeros(3), 0, 1, SeriesKind.LOG_RETURN, name="a")
        other = series.with_values(np.ones(3), name="b")
        assert series.values.tolist() == [0.0, 0.0, 0.0]
        assert other.name == "b"
        assert other.dt_ms == 1

    def test_to_dict(self):
        series = RegularSeries(np.array([0.5, 1.5]), 0, 1000, SeriesKind.VOLUME, name="v")
        data = series.to_dict()
        assert data["kind"] == "volume"
        assert data["values"] == [0.5, 1.5]
        assert "values" not in series.to_dict(include_values=False)


class TestAggregationReport:
    def test_fraction_bounds(self):
        with pytest.raises(ValidationError):
            AggregationReport(n_bins=2, zero_return_fraction=1.5, mean_bin_volume=0.0,
                              start_ms=0, dt_ms=1)


class TestCcdfCurve:
    def test_strictly_increasing_x(self):
        with pytest.raises(ValidationError, match="strictly increasing"):
            CcdfCurve(np.array([1.0, 1.0]), np.array([0.5, 0.25]), 2)

    @pytest.mark.parametrize("p", [0.0, 1.5])
    def test_probabilities_in_unit_interval(self, p):
        with pytest.raises(ValidationError, match=r"\(0, 1\]"):
            CcdfCurve(np.array([1.0, 2.0]), np.array([0.5, p]), 4)

    def test_positive_points(self):
        curve = CcdfCurve(np.array([0.0, 1.0, 2.0]), np.array([0.6, 0.3, 0.1]), 10)
        x, p = curve.positive
        assert x.tolist() == [1.0, 2.0]
        assert p.tolist() == [0.3, 0.1]


class TestGrids:
    """Tests for QGrid and ScaleGrid."""

    def test_default_q_grid(self):
        grid = QGrid.default()
        assert len(grid) == 41
        assert grid.values[grid.index(0.0)] == 0.0
        assert grid.values[grid.index(2.0)] == 2.0

    def test_q_grid_requires_two(self):
        with pytest.raises(ValidationError, match="q = 2"):
            QGrid(np.array([1.0, 3.0]))

    def test_q_grid_strictly_increasing(self):
        with pytest.raises(ValidationError, match="strictly increasing"):
            QGrid(np.array([2.0, 1.0]))

    def test_q_grid_from_spec(self):
        assert QGrid.from_spec("-2:2:1").to_list() == [-2.0, -1.0, 0.0, 1.0, 2.0]
        assert QGrid.from_spec("0.5, 2, 4").to_list() == [0.5, 2.0, 4.0]

    def test_q_grid_bad_spec(self):
        with pytest.raises(ValidationError, match="Invalid q grid"):
            QGrid.from_spec("a:b:c")

    def test_q_index_missing(self):
        with pytest.raises(ValidationError, match="not on the grid"):
            QGrid.default().index(0.1)

    def test_scale_grid(self):
        grid = ScaleGrid((16, 32, 64))
        assert grid.s_min == 16
        assert grid.s_max == 64
        assert grid.count == 3
        assert grid.as_array().dtype == np.float64

    def test_scale_grid_must_increase(self):
        with pytest.raises(ValidationError):
            ScaleGrid((16, 16))


class TestFluctuationSurface:
    def test_shape_must_match(self):
        with pytest.raises(ValidationError, match="shape"):
            FluctuationSurface(QGrid.from_spec("1,2"), ScaleGrid((4, 8)), np.ones((2, 3)))

    def test_unsigned_requires_positive(self):
        with pytest.raises(ValidationError, match="strictly positive"):
            FluctuationSurface(QGrid.from_spec("1,2"), ScaleGrid((4, 8)), -np.ones((2, 2)))

    def test_signed_allows_negative(self):
        surface = FluctuationSurface(
            QGrid.from_spec("1,2"), ScaleGrid((4, 8)), -np.ones((2, 2)), signed=True
        )
        assert surface.row(2.0).tolist() == [-1.0, -1.0]

    def test_unusable_scales(self):
        surface = FluctuationSurface(
            QGrid.from_spec("0,2"),
            ScaleGrid((4, 8)),
            np.ones((2, 2)),
            dropped=np.array([0, 5]),
            segments=np.array([100, 100]),
        )
        assert surface.unusable_scales == [8]
        assert surface.to_dict()["unusable_scales"] == [8]


class TestCurves:
    """Tests for HurstCurve, Spectrum and RhoSurface."""

    def test_hurst_properties(self):
        curve = HurstCurve(
            q=np.array([1.0, 2.0, 3.0]),
            h=np.array([0.8, 0.7, 0.6]),
            stderr=np.zeros(3),
            fit_range=(16.0, 256.0),
            r2=np.array([0.99, 0.97, 0.995]),
        )
        assert curve.H == 0.7
        assert curve.min_r2 == 0.97
        assert curve.at(3.0) == 0.6
        with pytest.raises(ValidationError):
            curve.at(4.0)

    def test_hurst_without_two(self):
        curve = HurstCurve(np.array([1.0]), np.array([0.5]), np.zeros(1), (1.0, 2.0))
        assert curve.H is None

    def test_hurst_negative_stderr(self):
        with pytest.raises(ValidationError):
            HurstCurve(np.array([2.0]), np.array([0.5]), np.array([-1.0]), (1.0, 2.0))

    def test_spectrum_width_and_apex(self):
        spec = Spectrum(
            q=np.array([-1.0, 0.0, 1.0]),
            alpha=np.array([0.9, 0.7, 0.5]),
            f_alpha=np.array([0.8, 1.0, 0.7]),
        )
        assert spec.width == pytest.approx(0.4)
        assert spec.apex_index == 1

    def test_rho_bounded_at_q2(self):
        with pytest.raises(ValidationError, match="exceeds 1"):
            RhoSurface(2.0, ScaleGrid((4, 8)), np.array([0.5, 1.2]))

    def test_rho_nan_serialized_as_none(self):
        rho = RhoSurface(2.0, ScaleGrid((4, 8)), np.array([0.5, np.nan]), flagged=(8,))
        assert rho.to_dict()["rho"] == [0.5, None]


class TestSurrogateSpec:
    def test_same_seed_same_stream(self):
        a = SurrogateSpec(SurrogateKind.SHUFFLE, seed=7, replicate_index=1).rng().random(5)
        b = SurrogateSpec(SurrogateKind.SHUFFLE, seed=7, replicate_index=1).rng().random(5)
        np.testing.assert_array_equal(a, b)

    def test_replicates_differ(self):
        a = SurrogateSpec(SurrogateKind.SHUFFLE, seed=7, replicate_index=0).rng().random(5)
        b = SurrogateSpec(SurrogateKind.SHUFFLE, seed=7, replicate_index=1).rng().random(5)
        assert not np.array_equal(a, b)

    def test_negative_seed(self):
        with pytest.raises(ValidationError):
            SurrogateSpec(SurrogateKind.FOURIER, seed=-1)


class TestCascadeParams:
    def test_length(self):
        assert CascadeParams(levels=10, p=0.75).length == 1024

    @pytest.mark.parametrize("levels,p", [(7, 0.75), (25, 0.75), (10, 0.5), (10, 1.0)])
    def test_bounds(self, levels, p):
        with pytest.raises(ValidationError):
            CascadeParams(levels=levels, p=p)
