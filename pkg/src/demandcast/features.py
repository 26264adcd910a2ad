"""Exogenous regressor construction: calendar categories, occupancy,
weather, harmonic terms, and the assembled per-hour feature matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np

from .errors import CoverageError, InputError
from .timeseries import HourlyTimeSeries

DAY_CATEGORIES = (
    "sem_weekday",
    "sem_weekend",
    "summer_weekday",
    "summer_weekend",
    "holiday_weekday",
    "holiday_weekend",
)
# Reference level dropped from regression designs for identifiability.
REFERENCE_CATEGORY = "sem_weekday"


@dataclass(frozen=True)
class CalendarSpec:
    """Academic calendar: semester and holiday date ranges (inclusive)
    plus explicit class-day overrides."""

    semester_ranges: tuple[tuple[date, date], ...]
    holiday_ranges: tuple[tuple[date, date], ...]
    class_overrides: dict[date, int] = field(default_factory=dict)

    def __post_init__(self):
        for ranges in (self.semester_ranges, self.holiday_ranges):
            last = None
            for lo, hi in ranges:
                if lo > hi:
                    raise InputError(f"calendar range {lo}..{hi} is reversed")
                if last is not None and lo <= last:
                    raise InputError("calendar ranges overlap or are unordered")
                last = hi

    def coverage(self) -> tuple[date, date]:
        """Covered span: full calendar years touched by any listed range."""
        dates = [d for r in self.semester_ranges + self.holiday_ranges for d in r]
        if not dates:
            raise InputError("calendar defines no ranges")
        return date(min(dates).year, 1, 1), date(max(dates).year, 12, 31)

    def _check_coverage(self, day: date) -> None:
        lo, hi = self.coverage()
        if not lo <= day <= hi:
            raise CoverageError(f"date {day} outside calendar coverage {lo}..{hi}")

    def _in(self, ranges, day: date) -> bool:
        return any(lo <= day <= hi for lo, hi in ranges)


def derive_day_category(day: date, cal: CalendarSpec) -> str:
    """Six-way day partition; weekend is Saturday/Sunday, holiday ranges
    take precedence over semester ranges."""
    cal._check_coverage(day)
    weekend = day.weekday() >= 5
    if cal._in(cal.holiday_ranges, day):
        base = "holiday"
    elif cal._in(cal.semester_ranges, day):
        base = "sem"
    else:
        base = "summer"
    return f"{base}_{'weekend' if weekend else 'weekday'}"


def class_binary(day: date, cal: CalendarSpec) -> int:
    """1 on standard class days: semester weekdays outside holiday ranges,
    unless explicitly overridden."""
    cal._check_coverage(day)
    if day in cal.class_overrides:
        return int(bool(cal.class_overrides[day]))
    return int(derive_day_category(day, cal) == "sem_weekday")


def build_harmonics(hour_of_day: int) -> tuple[float, float]:
    """Daily-seasonality harmonic pair (cos, sin) at a given clock hour."""
    if not 0 <= hour_of_day <= 23:
        raise InputError("hour of day must be in 0..23")
    angle = 2.0 * math.pi * hour_of_day / 24.0
    return math.cos(angle), math.sin(angle)


def compute_eui(annual_energy_kbtu: float, gross_area_ft2: float) -> float:
    """Energy use intensity: annual energy over gross floor area."""
    if gross_area_ft2 <= 0:
        raise InputError("gross floor area must be positive")
    return annual_energy_kbtu / gross_area_ft2


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-hour regressor rows aligned 1:1 with an hourly demand series.

    Categorical day categories are one-hot encoded with the reference
    level dropped; ``groups`` maps each logical variable to its columns.
    """

    start: datetime
    columns: tuple[str, ...]
    data: np.ndarray
    groups: dict[str, tuple[str, ...]]

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        if data.ndim != 2 or data.shape[1] != len(self.columns):
            raise InputError("feature matrix shape does not match column names")
        if not np.all(np.isfinite(data)):
            raise InputError("feature matrix contains missing cells")

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def select(self, variables: set[str] | list[str]) -> "FeatureMatrix":
        """Restrict to the given logical variables, preserving order."""
        keep_groups = {v: cols for v, cols in self.groups.items() if v in set(variables)}
        keep_cols = [c for c in self.columns for v in keep_groups if c in keep_groups[v]]
        idx = [self.columns.index(c) for c in keep_cols]
        return FeatureMatrix(
            self.start, tuple(keep_cols), self.data[:, idx], keep_groups
        )

    def rows(self, lo: int, hi: int) -> "FeatureMatrix":
        return FeatureMatrix(
            self.start + timedelta(hours=lo),
            self.columns,
            self.data[lo:hi],
            self.groups,
        )


@dataclass(frozen=True)
class FeatureOptions:
    include_humidity: bool = False
    building_area_by_year: dict[int, float] | None = None
    eui_by_year: dict[int, float] | None = None


def assemble_feature_matrix(
    demand: HourlyTimeSeries,
    weather: dict[datetime, tuple[float, float]],
    occupancy: dict[datetime, float],
    cal: CalendarSpec,
    options: FeatureOptions = FeatureOptions(),
) -> FeatureMatrix:
    """Row-aligned regressor matrix for every hour of the demand span.

    Weather and occupancy join by exact hour; a missing hour in either
    source is a hard error naming the timestamp.
    """
    n = len(demand)
    stamps = demand.timestamps()
    temp = np.empty(n)
    rh = np.empty(n)
    occ = np.empty(n)
    for i, ts in enumerate(stamps):
        if ts not in weather:
            raise CoverageError(f"weather file missing hour {ts.isoformat()}")
        if ts not in occupancy:
            raise CoverageError(f"occupancy file missing hour {ts.isoformat()}")
        temp[i], rh[i] = weather[ts]
        occ[i] = occupancy[ts]
    if options.include_humidity and not np.all(np.isfinite(rh)):
        raise CoverageError("weather file has missing humidity readings")
    if not np.all(np.isfinite(temp)) or not np.all(np.isfinite(occ)):
        raise CoverageError("weather or occupancy file has missing readings")

    columns: list[str] = ["time_step", "occupancy", "temperature"]
    groups: dict[str, tuple[str, ...]] = {
        "time_step": ("time_step",),
        "occupancy": ("occupancy",),
        "temperature": ("temperature",),
    }
    cols = [np.arange(1, n + 1, dtype=np.float64), occ, temp]
    if options.include_humidity:
        columns.append("humidity")
        groups["humidity"] = ("humidity",)
        cols.append(rh)

    cats = [derive_day_category(ts.date(), cal) for ts in stamps]
    dummy_levels = [c for c in DAY_CATEGORIES if c != REFERENCE_CATEGORY]
    dummy_names = tuple(f"day_{lvl}" for lvl in dummy_levels)
    for lvl, name in zip(dummy_levels, dummy_names):
        columns.append(name)
        cols.append(np.array([1.0 if c == lvl else 0.0 for c in cats]))
    groups["day_category"] = dummy_names

    columns.append("class_binary")
    groups["class_binary"] = ("class_binary",)
    cols.append(np.array([float(class_binary(ts.date(), cal)) for ts in stamps]))

    hours = demand.hour_of_day()
    angle = 2.0 * np.pi * hours / 24.0
    columns += ["cosine_term", "sine_term"]
    groups["cosine_term"] = ("cosine_term",)
    groups["sine_term"] = ("sine_term",)
    cols += [np.cos(angle), np.sin(angle)]

    for key, by_year in (
        ("building_area", options.building_area_by_year),
        ("eui", options.eui_by_year),
    ):
        if by_year is not None:
            missing_years = {ts.year for ts in stamps} - set(by_year)
            if missing_years:
                raise CoverageError(f"{key} missing for years {sorted(missing_years)}")
            columns.append(key)
            groups[key] = (key,)
            cols.append(np.array([by_year[ts.year] for ts in stamps], dtype=np.float64))

    return FeatureMatrix(demand.start, tuple(columns), np.column_stack(cols), groups)
