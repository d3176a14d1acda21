"""Design matrices for the seasonal time-of-week ARX model.

Columns, in canonical order: intercept, load lags ``Q1..Qna``, temperature
lags ``T0..Tnb``, irradiation lags ``I0..Inc`` and hour-of-week dummies
(ascending Monday 0h to Sunday 23h).
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import kernels
from .calendar import (
    DayType, HourOfWeek, SegmentKey, eligible_hours, format_timestamps,
    hour_of_week_index, segment_mask, split_train_test, to_hour64,
)
from .errors import EmptySegmentError, InputError
from .ingest import HourlySeries

MAX_NA, MAX_NB, MAX_NC = 12, 24, 24


class Scenario(str, Enum):
    LOAD_ONLY = "load-only"
    PLUS_TEMPERATURE = "plus-temperature"
    PLUS_IRRADIATION = "plus-irradiation"
    PLUS_CALENDAR = "plus-calendar"

    @property
    def level(self) -> int:
        return list(Scenario).index(self)

    @property
    def uses_temperature(self) -> bool:
        return self.level >= 1

    @property
    def uses_irradiation(self) -> bool:
        return self.level >= 2

    @property
    def uses_calendar(self) -> bool:
        return self is Scenario.PLUS_CALENDAR


@dataclass(frozen=True, order=True)
class LagSpec:
    """Lag orders: load lags 1..na, temperature 0..nb, irradiation 0..nc."""

    na: int
    nb: int = 0
    nc: int = 0

    def __post_init__(self):
        if not (1 <= self.na <= MAX_NA and 0 <= self.nb <= MAX_NB and 0 <= self.nc <= MAX_NC):
            raise InputError(f"lag orders out of range: {self}")

    def n_params(self, scenario: Scenario) -> int:
        k = self.na
        if scenario.uses_temperature:
            k += self.nb + 1
        if scenario.uses_irradiation:
            k += self.nc + 1
        return k


@dataclass(frozen=True)
class Column:
    """One regressor. ``kind`` is const, load, temp, irr or dummy."""

    kind: str
    lag: int = 0

    @property
    def label(self) -> str:
        if self.kind == "const":
            return "const"
        if self.kind == "dummy":
            return HourOfWeek(self.lag).label
        return {"load": "Q", "temp": "T", "irr": "I"}[self.kind] + str(self.lag)

    @property
    def hour(self) -> HourOfWeek:
        return HourOfWeek(self.lag)

    @classmethod
    def parse(cls, label: str) -> "Column":
        if label == "const":
            return cls("const")
        m = re.fullmatch(r"([QTI])(\d+)", label)
        if m:
            return cls({"Q": "load", "T": "temp", "I": "irr"}[m.group(1)], int(m.group(2)))
        return cls("dummy", HourOfWeek.from_label(label).index)

    def sort_key(self):
        return ("const", "load", "temp", "irr", "dummy").index(self.kind), self.lag

    def __str__(self):
        return self.label


CONST = Column("const")


def lag_columns(spec: LagSpec, scenario: Scenario) -> list[Column]:
    cols = [CONST] + [Column("load", k) for k in range(1, spec.na + 1)]
    if scenario.uses_temperature:
        cols += [Column("temp", k) for k in range(spec.nb + 1)]
    if scenario.uses_irradiation:
        cols += [Column("irr", k) for k in range(spec.nc + 1)]
    return cols


@dataclass
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    ts: np.ndarray
    columns: list
    segment: SegmentKey | None = None
    spec: LagSpec | None = None
    scenario: Scenario | None = None
    dummies: tuple = field(default_factory=tuple)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.columns]

    def subset(self, mask) -> "DesignMatrix":
        return replace(self, X=self.X[mask], y=self.y[mask], ts=self.ts[mask])

    def train(self) -> "DesignMatrix":
        return self.subset(split_train_test(self.ts)[0])

    def test(self) -> "DesignMatrix":
        return self.subset(split_train_test(self.ts)[1])

    def take_columns(self, cols) -> "DesignMatrix":
        pos = {c: i for i, c in enumerate(self.columns)}
        idx = [pos[c] for c in cols]
        return replace(self, X=self.X[:, idx], columns=list(cols))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["timestamp", "y"] + self.labels)
            for t, yi, row in zip(format_timestamps(self.ts), self.y, self.X):
                w.writerow([t, repr(float(yi))] + [repr(float(v)) for v in row])


def calendar_dummies(ts, daytype: DayType) -> np.ndarray:
    """One-hot vector over the hour-of-week slots eligible for ``daytype``."""
    ts = to_hour64(ts)
    hours = eligible_hours(daytype)
    how = int(hour_of_week_index(np.atleast_1d(ts))[0])
    if HourOfWeek(how).daytype is not DayType(daytype):
        raise InputError(f"{ts} is not a {DayType(daytype).value} hour")
    v = np.zeros(len(hours))
    v[how - hours[0].index] = 1.0
    return v


@dataclass
class _Grid:
    ts: np.ndarray
    load: np.ndarray
    temp: np.ndarray
    irr: np.ndarray
    load_ok: np.ndarray
    temp_ok: np.ndarray
    irr_ok: np.ndarray


def _dense_grid(series: HourlySeries) -> _Grid:
    if len(series) == 0:
        e = np.array([])
        return _Grid(np.array([], dtype="datetime64[h]"), e, e, e,
                     e.astype(bool), e.astype(bool), e.astype(bool))
    t = series.ts.astype(np.int64)
    pos = t - t[0]
    size = int(pos[-1]) + 1
    grid_ts = series.ts[0] + np.arange(size).astype("timedelta64[h]")
    cols = []
    for name in ("load", "temperature", "irradiation"):
        ok = series.usable(name)
        v = np.full(size, np.nan)
        v[pos[ok]] = getattr(series, name)[ok]
        okg = np.zeros(size, dtype=bool)
        okg[pos[ok]] = True
        cols.append((v, okg))
    (load, lok), (temp, tok), (irr, iok) = cols
    return _Grid(grid_ts, load, temp, irr, lok, tok, iok)


def _valid_rows(g: _Grid, seg: np.ndarray, spec: LagSpec, scenario: Scenario) -> np.ndarray:
    valid = seg & g.load_ok
    run = kernels.run_lengths(g.load_ok)
    prev = np.r_[0, run[:-1]]
    valid &= prev >= spec.na
    if scenario.uses_temperature:
        valid &= kernels.run_lengths(g.temp_ok) >= spec.nb + 1
    if scenario.uses_irradiation:
        valid &= kernels.run_lengths(g.irr_ok) >= spec.nc + 1
    return valid


def build_design_matrix(series: HourlySeries, segment: SegmentKey, spec: LagSpec,
                        scenario: Scenario = Scenario.PLUS_CALENDAR,
                        dummies=()) -> DesignMatrix:
    """Regression rows for ``segment``: targets with complete, gap-free lag windows.

    Lag windows may reach into hours of other segments; they may not cross a
    missing or outlier value. ``dummies`` are ignored unless the scenario is
    ``PLUS_CALENDAR``.
    """
    scenario = Scenario(scenario)
    hows = sorted({HourOfWeek(h.index if isinstance(h, HourOfWeek) else HourOfWeek.from_label(h).index)
                   for h in dummies}) if scenario.uses_calendar else []
    for h in hows:
        if h.daytype is not segment.daytype:
            raise InputError(f"dummy {h.label} is not eligible for {segment.daytype.value} models")
    g = _dense_grid(series)
    seg = segment_mask(g.ts, segment)
    valid = _valid_rows(g, seg, spec, scenario)
    if not valid.any():
        if not seg.any():
            raise EmptySegmentError(f"no timestamps fall in segment {segment.slug}", "segment")
        if not (seg & g.load_ok).any():
            raise EmptySegmentError(f"segment {segment.slug} has no usable load values", "load")
        raise EmptySegmentError(
            f"every {segment.slug} row has a gap in its lag window for spec {spec}", "gaps")
    rows = np.nonzero(valid)[0]
    columns = lag_columns(spec, scenario)
    X = np.empty((rows.size, len(columns) + len(hows)))
    for j, c in enumerate(columns):
        if c.kind == "const":
            X[:, j] = 1.0
        elif c.kind == "load":
            X[:, j] = g.load[rows - c.lag]
        elif c.kind == "temp":
            X[:, j] = g.temp[rows - c.lag]
        else:
            X[:, j] = g.irr[rows - c.lag]
    if hows:
        how = hour_of_week_index(g.ts[rows])
        for j, h in enumerate(hows):
            X[:, len(columns) + j] = how == h.index
        columns = columns + [Column("dummy", h.index) for h in hows]
    return DesignMatrix(X, g.load[rows], g.ts[rows], columns, segment, spec, scenario, tuple(hows))


def dummy_matrix(ts, hours) -> np.ndarray:
    """Indicator columns for ``hours`` evaluated at ``ts``."""
    how = hour_of_week_index(ts)
    return np.column_stack([how == h.index for h in hours]).astype(np.float64) if hours else \
        np.empty((len(how), 0))
