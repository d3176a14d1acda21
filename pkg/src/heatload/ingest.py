"""Meter and weather CSV ingestion, quarter-hour resampling and alignment."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .calendar import format_timestamps, parse_timestamp
from .errors import InputError, ParseError

log = logging.getLogger(__name__)

LOAD_HEADER = ["timestamp", "load_kwh"]
WEATHER_HEADER = ["timestamp", "temp_c", "irr_wm2"]
SERIES_HEADER = ["timestamp", "load_kwh", "temp_c", "irr_wm2", "load_flag", "temp_flag", "irr_flag"]


class Quality(IntEnum):
    OBSERVED = 0
    RESAMPLED = 1
    IMPUTED = 2
    MISSING = 3
    OUTLIER = 4

    @property
    def usable(self) -> bool:
        return self in (Quality.OBSERVED, Quality.RESAMPLED, Quality.IMPUTED)


class RawLoadRecord(NamedTuple):
    ts: np.datetime64
    load: float


class RawWeatherRecord(NamedTuple):
    ts: np.datetime64  # minute resolution
    temperature: float
    irradiation: float


class HourlyObservation(NamedTuple):
    ts: np.datetime64
    load: float
    temperature: float
    irradiation: float
    load_quality: Quality
    temperature_quality: Quality
    irradiation_quality: Quality


@dataclass
class HourlyWeather:
    ts: np.ndarray
    temperature: np.ndarray
    irradiation: np.ndarray
    temperature_quality: np.ndarray
    irradiation_quality: np.ndarray


@dataclass
class HourlySeries:
    """Columnar hourly observations, strictly increasing in time.

    Absent values are NaN; each value column has a parallel ``Quality`` code
    column. Rows are exposed as ``HourlyObservation`` on indexing.
    """

    ts: np.ndarray
    load: np.ndarray
    temperature: np.ndarray
    irradiation: np.ndarray
    load_quality: np.ndarray
    temperature_quality: np.ndarray
    irradiation_quality: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype="datetime64[h]")
        for name in ("load", "temperature", "irradiation"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        for name in ("load_quality", "temperature_quality", "irradiation_quality"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.int8))
        n = len(self.ts)
        if any(len(getattr(self, c)) != n for c in self._columns()):
            raise InputError("series columns differ in length")
        if n > 1 and not np.all(np.diff(self.ts.astype(np.int64)) > 0):
            raise InputError("series timestamps must be strictly increasing")

    @staticmethod
    def _columns():
        return ("load", "temperature", "irradiation",
                "load_quality", "temperature_quality", "irradiation_quality")

    def __len__(self):
        return len(self.ts)

    def __getitem__(self, i):
        return HourlyObservation(
            self.ts[i], self.load[i], self.temperature[i], self.irradiation[i],
            Quality(self.load_quality[i]), Quality(self.temperature_quality[i]),
            Quality(self.irradiation_quality[i]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def copy(self) -> "HourlySeries":
        return HourlySeries(self.ts.copy(), *(getattr(self, c).copy() for c in self._columns()),
                            meta=dict(self.meta))

    def select(self, mask) -> "HourlySeries":
        return HourlySeries(self.ts[mask], *(getattr(self, c)[mask] for c in self._columns()),
                            meta=dict(self.meta))

    def usable(self, name: str) -> np.ndarray:
        """Rows where column ``name`` holds a value fit for modelling."""
        values = getattr(self, name)
        q = getattr(self, f"{name}_quality")
        return np.isfinite(values) & (q <= Quality.IMPUTED)

    def to_csv(self, path_or_stream) -> None:
        rows = zip(
            format_timestamps(self.ts),
            _fmt_values(self.load), _fmt_values(self.temperature), _fmt_values(self.irradiation),
            (Quality(q).name.lower() for q in self.load_quality),
            (Quality(q).name.lower() for q in self.temperature_quality),
            (Quality(q).name.lower() for q in self.irradiation_quality),
        )
        with _open_write(path_or_stream) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SERIES_HEADER)
            w.writerows(rows)

    @classmethod
    def from_csv(cls, path_or_stream) -> "HourlySeries":
        with _open_read(path_or_stream) as (fh, name):
            reader = csv.reader(fh)
            _expect_header(reader, SERIES_HEADER, name)
            cols = [[] for _ in SERIES_HEADER]
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(SERIES_HEADER):
                    raise ParseError(f"expected {len(SERIES_HEADER)} fields, got {len(row)}", lineno, name)
                for c, v in zip(cols, row):
                    c.append(v)
        ts = _parse_ts_column(cols[0], name)
        values = [_parse_float_column(c, name, allow_empty=True) for c in cols[1:4]]
        flags = []
        for c in cols[4:]:
            try:
                flags.append(np.array([Quality[v.strip().upper()] for v in c], dtype=np.int8))
            except KeyError as exc:
                raise ParseError(f"unknown quality flag {exc.args[0]!r}", None, name) from None
        _reject_duplicates(ts, name)
        return cls(ts, *values, *flags)


# -- helpers -----------------------------------------------------------------

def _fmt_values(a):
    return ("" if not np.isfinite(v) else repr(float(v)) for v in a)


class _open_read:
    def __init__(self, src):
        self.src = src
        self.fh = None

    def __enter__(self):
        if isinstance(self.src, (str, Path)):
            self.fh = open(self.src, newline="", encoding="utf-8")
            return self.fh, str(self.src)
        return self.src, getattr(self.src, "name", None)

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()


class _open_write:
    def __init__(self, dst):
        self.dst = dst
        self.fh = None

    def __enter__(self):
        if isinstance(self.dst, (str, Path)):
            self.fh = open(self.dst, "w", newline="", encoding="utf-8")
            return self.fh
        return self.dst

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()


def _expect_header(reader, expected, name):
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file, missing header " + ",".join(expected), None, name) from None
    header = [h.strip().lstrip("﻿") for h in header]
    if header != expected:
        raise ParseError(f"header must be {','.join(expected)!r}, got {','.join(header)!r}", 1, name)


def _parse_ts_column(texts, name, first_line=2):
    out = np.empty(len(texts), dtype="datetime64[h]")
    for i, t in enumerate(texts):
        try:
            out[i] = parse_timestamp(t)
        except InputError as exc:
            raise ParseError(str(exc), first_line + i, name) from None
    return out


def _parse_float_column(texts, name, allow_empty=False, first_line=2):
    out = np.empty(len(texts))
    for i, t in enumerate(texts):
        s = t.strip()
        if not s:
            if allow_empty:
                out[i] = np.nan
                continue
            raise ParseError("empty numeric field", first_line + i, name)
        try:
            out[i] = float(s)
        except ValueError:
            raise ParseError(f"unparsable number {t!r}", first_line + i, name) from None
        if not np.isfinite(out[i]):
            raise ParseError(f"non-finite number {t!r}", first_line + i, name)
    return out


def _reject_duplicates(ts, name, first_line=2):
    if len(ts) < 2:
        return
    order = np.argsort(ts, kind="stable")
    s = ts[order]
    dup = np.nonzero(s[1:] == s[:-1])[0]
    if dup.size:
        i = int(max(order[dup[0]], order[dup[0] + 1]))
        raise ParseError(f"duplicate timestamp {format_timestamps(ts[i:i + 1])[0]}", first_line + i, name)


def _read_rows(stream, header):
    with _open_read(stream) as (fh, name):
        reader = csv.reader(fh)
        _expect_header(reader, header, name)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno, name)
            rows.append((lineno, row))
    return rows, name


# -- spec operations ---------------------------------------------------------

def parse_load_csv(stream) -> list[RawLoadRecord]:
    """Parse a ``timestamp,load_kwh`` meter export.

    Rows come back in file order. Any malformed row, or a timestamp seen
    twice, raises ``ParseError`` carrying the offending line number.
    """
    rows, name = _read_rows(stream, LOAD_HEADER)
    ts = np.empty(len(rows), dtype="datetime64[h]")
    load = np.empty(len(rows))
    for j, (lineno, (t, v)) in enumerate(rows):
        try:
            ts[j] = parse_timestamp(t)
        except InputError as exc:
            raise ParseError(str(exc), lineno, name) from None
        try:
            load[j] = float(v)
        except ValueError:
            raise ParseError(f"unparsable number {v!r}", lineno, name) from None
        if not np.isfinite(load[j]):
            raise ParseError(f"non-finite number {v!r}", lineno, name)
    if len(rows) > 1:
        order = np.argsort(ts, kind="stable")
        s = ts[order]
        dup = np.nonzero(s[1:] == s[:-1])[0]
        if dup.size:
            j = int(max(order[dup[0]], order[dup[0] + 1]))
            raise ParseError(f"duplicate timestamp {rows[j][1][0].strip()}", rows[j][0], name)
    return [RawLoadRecord(t, float(v)) for t, v in zip(ts, load)]


def parse_weather_csv(stream) -> list[RawWeatherRecord]:
    """Parse a ``timestamp,temp_c,irr_wm2`` quarter-hour weather export.

    Empty numeric fields are read as missing samples (NaN).
    """
    rows, name = _read_rows(stream, WEATHER_HEADER)
    out = []
    seen = set()
    for lineno, (t, temp, irr) in rows:
        s = t.strip()
        if len(s) != 16 or s[10] != "T":
            raise ParseError(f"unparsable timestamp {t!r}", lineno, name)
        try:
            ts = np.datetime64(s, "m")
        except ValueError:
            raise ParseError(f"unparsable timestamp {t!r}", lineno, name) from None
        if ts in seen:
            raise ParseError(f"duplicate timestamp {s}", lineno, name)
        seen.add(ts)
        vals = []
        for v in (temp, irr):
            v = v.strip()
            if not v:
                vals.append(np.nan)
                continue
            try:
                x = float(v)
            except ValueError:
                raise ParseError(f"unparsable number {v!r}", lineno, name) from None
            if not np.isfinite(x):
                raise ParseError(f"non-finite number {v!r}", lineno, name)
            vals.append(x)
        out.append(RawWeatherRecord(ts, vals[0], vals[1]))
    return out


def resample_weather(records, min_samples: int = 3) -> HourlyWeather:
    """Reduce quarter-hour weather samples to hourly means.

    Samples at minutes 0, 15, 30 and 45 belong to the hour that contains
    them. An hour with at least ``min_samples`` of its four samples present
    (per field) gets their mean and the RESAMPLED flag, otherwise MISSING.
    Samples at other minutes are ignored.
    """
    if not records:
        empty = np.array([], dtype="datetime64[h]")
        return HourlyWeather(empty, np.array([]), np.array([]),
                             np.array([], dtype=np.int8), np.array([], dtype=np.int8))
    ts = np.array([r.ts for r in records], dtype="datetime64[m]")
    temp = np.array([r.temperature for r in records], dtype=np.float64)
    irr = np.array([r.irradiation for r in records], dtype=np.float64)
    minute = (ts - ts.astype("datetime64[h]")).astype(np.int64)
    on_grid = minute % 15 == 0
    if not on_grid.all():
        log.warning("ignoring %d weather samples off the 15-minute grid", int((~on_grid).sum()))
    ts, temp, irr = ts[on_grid], temp[on_grid], irr[on_grid]
    if len(ts) == 0:
        return resample_weather([], min_samples)
    hours = ts.astype("datetime64[h]")
    uniq, inverse = np.unique(hours, return_inverse=True)
    out = [uniq]
    quals = []
    for values in (temp, irr):
        present = np.isfinite(values)
        count = np.bincount(inverse, weights=present.astype(np.float64), minlength=len(uniq))
        total = np.bincount(inverse, weights=np.where(present, values, 0.0), minlength=len(uniq))
        enough = count >= min_samples
        mean = np.full(len(uniq), np.nan)
        mean[enough] = total[enough] / count[enough]
        out.append(mean)
        quals.append(np.where(enough, Quality.RESAMPLED, Quality.MISSING).astype(np.int8))
    return HourlyWeather(out[0], out[1], out[2], quals[0], quals[1])


def align(load, weather: HourlyWeather) -> HourlySeries:
    """Full outer join of hourly load and hourly weather on timestamp."""
    load_ts = np.array([r.ts for r in load], dtype="datetime64[h]")
    load_v = np.array([r.load for r in load], dtype=np.float64)
    ts = np.union1d(load_ts, weather.ts)
    n = len(ts)
    out_load = np.full(n, np.nan)
    load_q = np.full(n, Quality.MISSING, dtype=np.int8)
    li = np.searchsorted(ts, load_ts)
    out_load[li] = load_v
    load_q[li] = Quality.OBSERVED
    temp = np.full(n, np.nan)
    irr = np.full(n, np.nan)
    temp_q = np.full(n, Quality.MISSING, dtype=np.int8)
    irr_q = np.full(n, Quality.MISSING, dtype=np.int8)
    wi = np.searchsorted(ts, weather.ts)
    temp[wi] = weather.temperature
    irr[wi] = weather.irradiation
    temp_q[wi] = weather.temperature_quality
    irr_q[wi] = weather.irradiation_quality
    return HourlySeries(ts, out_load, temp, irr, load_q, temp_q, irr_q)


def load_series(load_path, weather_path) -> HourlySeries:
    """Parse, resample and align one building's meter and weather files."""
    return align(parse_load_csv(load_path), resample_weather(parse_weather_csv(weather_path)))


def read_text(text: str):
    """Wrap CSV text in a stream (handy for tests and small fixtures)."""
    return io.StringIO(text)
