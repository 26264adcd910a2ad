"""File formats: demand/weather/occupancy CSVs, the calendar file,
run configuration, model bundles, and report emission."""

from __future__ import annotations

import csv
import json
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import FormatError
from .features import CalendarSpec
from .timeseries import HourlyTimeSeries, RawSeries


def _parse_stamp(text: str, line: int) -> datetime:
    try:
        return datetime.fromisoformat(text.strip())
    except ValueError:
        raise FormatError(f"bad timestamp {text!r}", line) from None


def read_demand_csv(path: str | Path) -> RawSeries:
    """Demand CSV ``timestamp,kw``: 15-minute or hourly cadence detected
    from the first two rows; an empty kw field is a missing reading."""
    rows: list[tuple[datetime, float, bool]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["timestamp", "kw"]:
            raise FormatError("expected header 'timestamp,kw'", 1)
        for line, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise FormatError("expected two fields", line)
            ts = _parse_stamp(row[0], line)
            raw = row[1].strip()
            if raw == "":
                rows.append((ts, 0.0, True))
            else:
                try:
                    rows.append((ts, float(raw), False))
                except ValueError:
                    raise FormatError(f"bad kw value {raw!r}", line) from None
    if len(rows) < 2:
        raise FormatError("need at least two readings to detect cadence")
    step = rows[1][0] - rows[0][0]
    minutes = step.total_seconds() / 60.0
    if minutes not in (15.0, 60.0):
        raise FormatError(f"unsupported cadence of {minutes:g} minutes", 3)
    for i in range(1, len(rows)):
        if rows[i][0] - rows[i - 1][0] != step:
            raise FormatError(
                f"gap or duplicate at {rows[i][0].isoformat()}", i + 2
            )
    return RawSeries(
        start=rows[0][0],
        values=np.array([v for _, v, _ in rows]),
        interval_minutes=int(minutes),
        missing=np.array([m for _, _, m in rows], dtype=bool),
    )


def write_hourly_csv(series: HourlyTimeSeries, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "kw"])
        for ts, v in zip(series.timestamps(), series.values):
            writer.writerow([ts.isoformat(sep=" "), f"{v:.6f}"])


def _read_hourly_map(path, value_fields, header_names):
    out: dict[datetime, tuple] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expect = [h.lower() for h in header_names]
        if header is None or [c.strip().lower() for c in header[: len(expect)]] != expect:
            raise FormatError(f"expected header '{','.join(header_names)}'", 1)
        for line, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 1 + value_fields:
                raise FormatError("missing fields", line)
            ts = _parse_stamp(row[0], line)
            vals = []
            for raw in row[1 : 1 + value_fields]:
                raw = raw.strip()
                vals.append(float("nan") if raw == "" else float(raw))
            if ts in out:
                raise FormatError(f"duplicate timestamp {ts.isoformat()}", line)
            out[ts] = tuple(vals)
    return out


def read_weather_csv(path: str | Path) -> dict[datetime, tuple[float, float]]:
    """Weather CSV ``timestamp,temp_c,rh_pct`` at hourly cadence."""
    return _read_hourly_map(path, 2, ["timestamp", "temp_c", "rh_pct"])


def read_occupancy_csv(path: str | Path) -> dict[datetime, float]:
    """Occupancy CSV ``timestamp,fte`` at hourly cadence."""
    raw = _read_hourly_map(path, 1, ["timestamp", "fte"])
    return {ts: vals[0] for ts, vals in raw.items()}


def _parse_date(text: str, line: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise FormatError(f"bad date {text!r}", line) from None


def parse_calendar(path: str | Path) -> CalendarSpec:
    """Plain-text calendar: ``semester = A..B``, ``holiday = A..B``,
    optional ``class_override = date,0|1`` lines; '#' starts a comment."""
    semesters: list[tuple[date, date]] = []
    holidays: list[tuple[date, date]] = []
    overrides: dict[date, int] = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise FormatError("expected 'key = value'", line_no)
            key, value = (part.strip() for part in text.split("=", 1))
            if key in ("semester", "holiday"):
                if ".." not in value:
                    raise FormatError("expected 'start..end' date range", line_no)
                lo, hi = (
                    _parse_date(part, line_no) for part in value.split("..", 1)
                )
                (semesters if key == "semester" else holidays).append((lo, hi))
            elif key == "class_override":
                if "," not in value:
                    raise FormatError("expected 'date,0|1'", line_no)
                dpart, flag = value.split(",", 1)
                if flag.strip() not in ("0", "1"):
                    raise FormatError("class_override flag must be 0 or 1", line_no)
                overrides[_parse_date(dpart, line_no)] = int(flag)
            else:
                raise FormatError(f"unknown calendar key {key!r}", line_no)
    return CalendarSpec(
        tuple(sorted(semesters)), tuple(sorted(holidays)), overrides
    )


def write_weather_csv(path, stamps, temp, rh):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "temp_c", "rh_pct"])
        for ts, t, h in zip(stamps, temp, rh):
            writer.writerow([ts.isoformat(sep=" "), f"{t:.4f}", f"{h:.4f}"])


def write_occupancy_csv(path, stamps, fte):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "fte"])
        for ts, v in zip(stamps, fte):
            writer.writerow([ts.isoformat(sep=" "), f"{v:.4f}"])


def write_calendar(path, cal: CalendarSpec) -> None:
    with open(path, "w") as fh:
        for lo, hi in cal.semester_ranges:
            fh.write(f"semester = {lo.isoformat()}..{hi.isoformat()}\n")
        for lo, hi in cal.holiday_ranges:
            fh.write(f"holiday = {lo.isoformat()}..{hi.isoformat()}\n")
        for day, flag in sorted(cal.class_overrides.items()):
            fh.write(f"class_override = {day.isoformat()},{flag}\n")


def parse_config(path: str | Path) -> dict[str, dict[str, str]]:
    """Flat ``key = value`` sections (INI style)."""
    import configparser

    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise FormatError(f"cannot read config file {path}")
    return {section: dict(parser[section]) for section in parser.sections()}


def save_model_bundle(bundle: dict, path: str | Path) -> None:
    """Versioned, self-describing model bundle (JSON)."""
    payload = {"format": "demandcast-model", "format_version": 1, **bundle}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def load_model_bundle(path: str | Path) -> dict:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != "demandcast-model":
        raise FormatError("not a demandcast model bundle")
    if payload.get("format_version") != 1:
        raise FormatError(
            f"unsupported bundle version {payload.get('format_version')}"
        )
    return payload


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (datetime, date)):
        return obj.isoformat()
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_json(payload: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")
