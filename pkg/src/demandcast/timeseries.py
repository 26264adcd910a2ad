"""Hourly demand series: container, cleaning, transforms, diagnostics.

All operations are pure: they return new objects and never mutate their
inputs, so values are safe to share across concurrent tasks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np
from scipy.special import kolmogorov, ndtr

from .errors import CleaningError, FormatError, InputError

HOUR = timedelta(hours=1)


@dataclass(frozen=True)
class HourlyTimeSeries:
    """Contiguous hourly demand observations.

    Index ``i`` maps to ``start + i`` hours; there are no gaps or
    duplicates.  Values are kW, or log-kW when ``log_scale`` is set.
    """

    start: datetime
    values: np.ndarray
    log_scale: bool = False
    missing: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if len(values) < 1:
            raise InputError("series must contain at least one value")
        missing = self.missing
        if missing is None:
            missing = np.zeros(len(values), dtype=bool)
        else:
            missing = np.asarray(missing, dtype=bool)
            if len(missing) != len(values):
                raise InputError("missing mask length mismatch")
        object.__setattr__(self, "missing", missing)
        if self.start.minute or self.start.second or self.start.microsecond:
            raise InputError("series must start on a whole hour")

    def __len__(self) -> int:
        return len(self.values)

    def timestamps(self) -> list[datetime]:
        return [self.start + i * HOUR for i in range(len(self.values))]

    def hour_of_day(self) -> np.ndarray:
        return (self.start.hour + np.arange(len(self.values))) % 24

    def slice(self, lo: int, hi: int) -> "HourlyTimeSeries":
        return HourlyTimeSeries(
            start=self.start + lo * HOUR,
            values=self.values[lo:hi].copy(),
            log_scale=self.log_scale,
            missing=self.missing[lo:hi].copy(),
        )


@dataclass(frozen=True)
class RawSeries:
    """Sub-hourly (or hourly) meter readings at a fixed cadence."""

    start: datetime
    values: np.ndarray
    interval_minutes: int
    missing: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        missing = self.missing
        if missing is None:
            missing = np.zeros(len(values), dtype=bool)
        else:
            missing = np.asarray(missing, dtype=bool)
        object.__setattr__(self, "missing", missing)


@dataclass
class CleaningReport:
    """What fill_gaps changed: counts are numbers of indices altered."""

    single_hour_fills: int = 0
    multi_hour_fills: int = 0
    na_fills: int = 0
    fill_spans: list[tuple[int, int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "single_hour_fills": self.single_hour_fills,
            "multi_hour_fills": self.multi_hour_fills,
            "na_fills": self.na_fills,
            "fill_spans": [
                {"start": s, "length": n, "scale": f} for s, n, f in self.fill_spans
            ],
        }


@dataclass(frozen=True)
class AcfResult:
    """Sample autocorrelation and partial autocorrelation by lag (0..max)."""

    lags: np.ndarray
    coefficients: np.ndarray
    partial: np.ndarray


def aggregate_to_hourly(raw: RawSeries) -> HourlyTimeSeries:
    """Sum each hour's four 15-minute readings into one hourly value.

    An hour containing any missing reading is marked missing.  Hourly
    input passes through unchanged.
    """
    if raw.interval_minutes == 60:
        return HourlyTimeSeries(raw.start, raw.values.copy(), missing=raw.missing.copy())
    if raw.interval_minutes != 15:
        raise FormatError(
            f"unsupported reading interval: {raw.interval_minutes} minutes"
        )
    if raw.start.minute != 0:
        raise FormatError("15-minute readings must start aligned to the hour")
    if len(raw.values) % 4 != 0:
        raise FormatError("15-minute reading count is not a multiple of 4")
    blocks = raw.values.reshape(-1, 4)
    miss = raw.missing.reshape(-1, 4).any(axis=1)
    hourly = np.where(miss, np.nan, np.nansum(np.where(
        raw.missing.reshape(-1, 4), 0.0, blocks), axis=1))
    return HourlyTimeSeries(raw.start, hourly, missing=miss)


def _bad_runs(bad: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous runs of flagged indices as (start, length)."""
    runs = []
    i = 0
    n = len(bad)
    while i < n:
        if bad[i]:
            j = i
            while j < n and bad[j]:
                j += 1
            runs.append((i, j - i))
            i = j
        else:
            i += 1
    return runs


def fill_gaps(series: HourlyTimeSeries) -> tuple[HourlyTimeSeries, CleaningReport]:
    """Replace zero/missing readings, which correspond to outages.

    Isolated bad hours take the mean of their two neighbours.  Runs of two
    or more take the same clock hours of the previous day, scaled by the
    ratio of the gap's boundary values to the reference day's values at
    those same two clock hours.
    """
    if series.log_scale:
        raise InputError("fill_gaps operates on the kW scale, not log scale")
    v = series.values.copy()
    miss = series.missing
    bad = miss | (v == 0.0) | ~np.isfinite(v)
    report = CleaningReport()
    n = len(v)
    for start, length in _bad_runs(bad):
        end = start + length - 1
        if start == 0 or end == n - 1:
            raise CleaningError(
                f"gap at series boundary (index {start}, length {length}) "
                "has no neighbouring value to fill from"
            )
        report.na_fills += int(miss[start : end + 1].sum())
        if length == 1:
            v[start] = 0.5 * (v[start - 1] + v[start + 1])
            report.single_hour_fills += 1
            report.fill_spans.append((start, 1, 1.0))
            continue
        if start < 25:
            raise CleaningError(
                f"multi-hour gap at index {start} lies within the first 25 "
                "hours; no previous-day reference exists"
            )
        # Scale: boundary values against the reference day at the same
        # two clock hours.  If the hour after the gap has no previous-day
        # value outside the gap (gaps of 24h or more), use the leading
        # boundary pair alone.
        ref_idx = [start - 1 - 24]
        bound_idx = [start - 1]
        if end + 1 - 24 < start:
            ref_idx.append(end + 1 - 24)
            bound_idx.append(end + 1)
        ref = v[ref_idx]
        bound = v[bound_idx]
        if np.any(bad[ref_idx]) or np.any(ref <= 0):
            raise CleaningError(
                f"previous-day reference for gap at index {start} is itself "
                "missing or zero"
            )
        scale = float(np.mean(bound) / np.mean(ref))
        for i in range(start, end + 1):
            v[i] = scale * v[i - 24]
        report.multi_hour_fills += length
        report.fill_spans.append((start, length, scale))
    out = HourlyTimeSeries(series.start, v, log_scale=False)
    if np.any(out.values <= 0) or not np.all(np.isfinite(out.values)):
        raise CleaningError("cleaning left non-positive or non-finite values")
    return out, report


def log_transform(series: HourlyTimeSeries) -> HourlyTimeSeries:
    """Natural log, elementwise."""
    if series.log_scale:
        raise InputError("series is already log-transformed")
    if np.any(series.values <= 0):
        raise InputError("log transform requires strictly positive values")
    return HourlyTimeSeries(
        series.start, np.log(series.values), log_scale=True, missing=series.missing.copy()
    )


def inverse_log_transform(
    series: HourlyTimeSeries, bias_sigma2: float | None = None
) -> HourlyTimeSeries:
    """Back-transform to kW.

    ``bias_sigma2``, when given, applies the lognormal mean adjustment
    exp(sigma^2 / 2); off by default.
    """
    if not series.log_scale:
        raise InputError("series is not log-transformed")
    shift = 0.5 * bias_sigma2 if bias_sigma2 is not None else 0.0
    return HourlyTimeSeries(
        series.start,
        np.exp(series.values + shift),
        log_scale=False,
        missing=series.missing.copy(),
    )


def ks_normality_test(values: np.ndarray) -> tuple[float, float]:
    """Kolmogorov-Smirnov distance to a normal with estimated moments.

    Mean and standard deviation come from the sample (Lilliefors
    conditions); the p-value uses the asymptotic Kolmogorov distribution
    and is therefore approximate (conservative).
    """
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = len(x)
    if n < 8:
        raise InputError("normality test needs at least 8 observations")
    sd = x.std(ddof=1)
    if sd == 0:
        raise InputError("normality test is undefined for a constant sample")
    z = (x - x.mean()) / sd
    cdf = ndtr(z)
    i = np.arange(1, n + 1)
    d = float(np.max(np.maximum(i / n - cdf, cdf - (i - 1) / n)))
    p = float(kolmogorov(np.sqrt(n) * d))
    return d, p


def acf_pacf(values: np.ndarray, max_lag: int) -> AcfResult:
    """Sample ACF (biased estimator) and PACF via Durbin-Levinson."""
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if max_lag >= n / 2:
        raise InputError("max_lag must be below half the series length")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0:
        raise InputError("autocorrelation is undefined for a constant series")
    r = np.empty(max_lag + 1)
    r[0] = 1.0
    for k in range(1, max_lag + 1):
        r[k] = float(xc[k:] @ xc[:-k]) / denom
    pacf = np.empty(max_lag + 1)
    pacf[0] = 1.0
    if max_lag >= 1:
        phi_prev = np.array([r[1]])
        pacf[1] = r[1]
        for k in range(2, max_lag + 1):
            num = r[k] - phi_prev @ r[k - 1 : 0 : -1]
            den = 1.0 - phi_prev @ r[1:k]
            a = num / den
            phi = np.empty(k)
            phi[:-1] = phi_prev - a * phi_prev[::-1]
            phi[-1] = a
            pacf[k] = a
            phi_prev = phi
    return AcfResult(np.arange(max_lag + 1), r, pacf)


def difference(values: np.ndarray, d: int, D: int, m: int = 24) -> np.ndarray:
    """Apply (1-B)^d then (1-B^m)^D to a series."""
    if d < 0 or D < 0:
        raise InputError("differencing orders must be non-negative")
    if D > 0 and m < 2:
        raise InputError("seasonal differencing requires season length >= 2")
    u = np.asarray(values, dtype=np.float64)
    if len(u) <= d + D * m:
        raise InputError("series too short for the requested differencing")
    for _ in range(d):
        u = u[1:] - u[:-1]
    for _ in range(D):
        u = u[m:] - u[:-m]
    return u


def difference_with_prefix(
    values: np.ndarray, d: int, D: int, m: int = 24
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Like :func:`difference` but also return the dropped initial values
    of each stage, which make the operation exactly invertible."""
    u = np.asarray(values, dtype=np.float64)
    prefixes: list[np.ndarray] = []
    for _ in range(d):
        prefixes.append(u[:1].copy())
        u = u[1:] - u[:-1]
    for _ in range(D):
        prefixes.append(u[:m].copy())
        u = u[m:] - u[:-m]
    return u, prefixes


def undifference(
    diffed: np.ndarray, prefixes: list[np.ndarray], d: int, D: int, m: int = 24
) -> np.ndarray:
    """Exact inverse of :func:`difference_with_prefix`."""
    u = np.asarray(diffed, dtype=np.float64)
    for prefix in reversed(prefixes[d:]):
        out = np.empty(len(u) + m)
        out[:m] = prefix
        for i in range(len(u)):
            out[m + i] = u[i] + out[i]
        u = out
    for prefix in reversed(prefixes[:d]):
        out = np.empty(len(u) + 1)
        out[0] = prefix[0]
        np.cumsum(u, out=out[1:])
        out[1:] += prefix[0]
        u = out
    return u


def undifference_forecast(
    history: np.ndarray, w_future: np.ndarray, d: int, D: int, m: int = 24
) -> np.ndarray:
    """Reconstruct future levels from forecasts of the differenced series.

    ``history`` is the undifferenced training series; the differencing
    order of ``w_future`` must match (d, D, m).
    """
    h = len(w_future)
    stages = [np.asarray(history, dtype=np.float64)]
    u = stages[0]
    for _ in range(d):
        u = u[1:] - u[:-1]
        stages.append(u)
    for _ in range(D):
        u = u[m:] - u[:-m]
        stages.append(u)
    # Walk back up: at each stage, future values are the deeper stage's
    # future values plus this stage's lagged values.
    future = np.asarray(w_future, dtype=np.float64)
    for si in range(len(stages) - 2, -1, -1):
        lag = m if si >= d else 1
        prior = stages[si]
        ext = np.concatenate([prior, np.zeros(h)])
        np_prior = len(prior)
        for i in range(h):
            ext[np_prior + i] = future[i] + ext[np_prior + i - lag]
        future = ext[np_prior:]
    return future
