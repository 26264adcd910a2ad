"""Exogenous regressor construction tests."""

from datetime import date, datetime

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from demandcast.errors import CoverageError, InputError
from demandcast.features import (
    DAY_CATEGORIES,
    REFERENCE_CATEGORY,
    CalendarSpec,
    FeatureOptions,
    assemble_feature_matrix,
    build_harmonics,
    class_binary,
    compute_eui,
    derive_day_category,
    assemble_feature_matrix as assemble,
)
from demandcast.timeseries import HourlyTimeSeries

CAL = CalendarSpec(
    semester_ranges=(
        (date(2021, 1, 15), date(2021, 5, 15)),
        (date(2021, 8, 20), date(2021, 12, 15)),
    ),
    holiday_ranges=((date(2021, 11, 22), date(2021, 11, 28)),),
    class_overrides={date(2021, 5, 10): 0},
)


class TestHarmonics:
    def test_hour_zero(self):
        assert build_harmonics(0) == pytest.approx((1.0, 0.0))

    def test_quarter_period(self):
        c, s = build_harmonics(6)
        assert c == pytest.approx(0.0, abs=1e-15)
        assert s == pytest.approx(1.0)

    def test_half_period(self):
        c, s = build_harmonics(12)
        assert c == pytest.approx(-1.0)
        assert s == pytest.approx(0.0, abs=1e-15)

    @given(st.integers(0, 23))
    def test_unit_circle(self, h):
        c, s = build_harmonics(h)
        assert c * c + s * s == pytest.approx(1.0, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(InputError):
            build_harmonics(24)


class TestDayCategory:
    def test_semester_tuesday(self):
        assert derive_day_category(date(2021, 2, 2), CAL) == "sem_weekday"

    def test_holiday_saturday(self):
        assert derive_day_category(date(2021, 11, 27), CAL) == "holiday_weekend"

    def test_summer_wednesday(self):
        assert derive_day_category(date(2021, 6, 16), CAL) == "summer_weekday"

    def test_outside_coverage(self):
        with pytest.raises(CoverageError):
            derive_day_category(date(2035, 1, 1), CAL)

    def test_function_of_date_only(self):
        d = date(2021, 3, 3)
        assert derive_day_category(d, CAL) == derive_day_category(d, CAL)


class TestClassBinary:
    def test_semester_tuesday_is_class_day(self):
        assert class_binary(date(2021, 2, 2), CAL) == 1

    def test_summer_weekday_is_not(self):
        assert class_binary(date(2021, 6, 16), CAL) == 0

    def test_override_wins(self):
        # 2021-05-10 is a semester Monday but configured non-class.
        assert class_binary(date(2021, 5, 10), CAL) == 0

    def test_holiday_weekday_is_not(self):
        assert class_binary(date(2021, 11, 24), CAL) == 0


class TestEui:
    def test_simple_quotient(self):
        assert compute_eui(1000.0, 100.0) == 10.0

    def test_zero_energy(self):
        assert compute_eui(0.0, 100.0) == 0.0

    def test_mwh_conversion_scale(self):
        # 39,059 MWh = 39,059 * 3412.14 kBTU over 3,000,000 sq ft.
        kbtu = 39059 * 3412.14
        assert compute_eui(kbtu, 3_000_000) == pytest.approx(44.4, abs=0.05)

    def test_zero_area_rejected(self):
        with pytest.raises(InputError):
            compute_eui(100.0, 0.0)


def _inputs(n_hours=48, start=datetime(2021, 2, 1)):
    demand = HourlyTimeSeries(start, np.full(n_hours, 1000.0))
    stamps = demand.timestamps()
    weather = {ts: (5.0 + i * 0.1, 50.0) for i, ts in enumerate(stamps)}
    occupancy = {ts: 100.0 + i for i, ts in enumerate(stamps)}
    return demand, weather, occupancy


class TestAssemble:
    def test_shape_and_columns(self):
        demand, weather, occupancy = _inputs()
        X = assemble_feature_matrix(demand, weather, occupancy, CAL)
        assert X.n_rows == 48
        assert X.columns[:3] == ("time_step", "occupancy", "temperature")
        assert "class_binary" in X.columns
        assert "cosine_term" in X.columns and "sine_term" in X.columns

    def test_reference_level_dropped(self):
        demand, weather, occupancy = _inputs()
        X = assemble_feature_matrix(demand, weather, occupancy, CAL)
        dummies = X.groups["day_category"]
        assert len(dummies) == 5
        assert f"day_{REFERENCE_CATEGORY}" not in X.columns
        for lvl in DAY_CATEGORIES:
            if lvl != REFERENCE_CATEGORY:
                assert f"day_{lvl}" in dummies

    def test_missing_occupancy_hour_named(self):
        demand, weather, occupancy = _inputs()
        missing = demand.timestamps()[10]
        del occupancy[missing]
        with pytest.raises(CoverageError, match=missing.isoformat()):
            assemble_feature_matrix(demand, weather, occupancy, CAL)

    def test_unit_circle_rows(self):
        demand, weather, occupancy = _inputs()
        X = assemble_feature_matrix(demand, weather, occupancy, CAL)
        c = X.column("cosine_term")
        s = X.column("sine_term")
        np.testing.assert_allclose(c * c + s * s, 1.0, atol=1e-12)

    def test_time_step_strictly_increasing_unit_stride(self):
        demand, weather, occupancy = _inputs()
        X = assemble_feature_matrix(demand, weather, occupancy, CAL)
        t = X.column("time_step")
        assert np.all(np.diff(t) == 1.0)
        assert t[0] == 1.0

    def test_deterministic(self):
        demand, weather, occupancy = _inputs()
        a = assemble_feature_matrix(demand, weather, occupancy, CAL)
        b = assemble_feature_matrix(demand, weather, occupancy, CAL)
        assert a.data.tobytes() == b.data.tobytes()

    def test_optional_columns(self):
        demand, weather, occupancy = _inputs()
        X = assemble_feature_matrix(
            demand,
            weather,
            occupancy,
            CAL,
            FeatureOptions(
                include_humidity=True,
                building_area_by_year={2021: 2.5e6},
                eui_by_year={2021: 44.4},
            ),
        )
        assert "humidity" in X.columns
        assert np.all(X.column("building_area") == 2.5e6)
        assert np.all(X.column("eui") == 44.4)

    def test_select_and_rows(self):
        demand, weather, occupancy = _inputs()
        X = assemble_feature_matrix(demand, weather, occupancy, CAL)
        sub = X.select(["temperature", "day_category"])
        assert sub.columns[0] == "temperature"
        assert len(sub.columns) == 6
        window = X.rows(10, 20)
        assert window.n_rows == 10
        assert window.column("time_step")[0] == 11.0
