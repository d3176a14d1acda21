"""Forecast error metrics, quantiles and the grouped summaries built on them.

Errors are ``predicted - actual``: a positive error is an over-forecast.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .calendar import (
    SEGMENTS, format_timestamps, hours_of_day, months, parse_timestamp,
    segment_mask, split_train_test,
)
from .errors import EmptySegmentError, InputError
from .features import Scenario, build_design_matrix
from .forecast import ForecastRequest, forecast_recursive
from .ingest import HourlySeries
from .preprocess import quantile
from .regression import FittedModel

MAPE_FLOOR = 0.1
SUMMARY_PROBS = (0.01, 0.10, 0.90, 0.99)
SAMPLES_HEADER = ["segment", "scenario", "timestamp", "actual_kwh", "predicted_kwh", "error_kwh"]


class ErrorSample(NamedTuple):
    ts: np.datetime64
    actual: float
    predicted: float

    @property
    def error(self) -> float:
        return self.predicted - self.actual


@dataclass
class ErrorSamples:
    """Columnar error samples."""

    ts: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype="datetime64[h]")
        self.actual = np.asarray(self.actual, dtype=np.float64)
        self.predicted = np.asarray(self.predicted, dtype=np.float64)
        if not len(self.ts) == len(self.actual) == len(self.predicted):
            raise InputError("error sample columns differ in length")

    @classmethod
    def of(cls, samples) -> "ErrorSamples":
        if isinstance(samples, ErrorSamples):
            return samples
        samples = list(samples)
        return cls(np.array([s.ts for s in samples], dtype="datetime64[h]"),
                   [s.actual for s in samples], [s.predicted for s in samples])

    @classmethod
    def concat(cls, parts) -> "ErrorSamples":
        parts = list(parts)
        if not parts:
            return cls(np.array([], dtype="datetime64[h]"), [], [])
        return cls(np.concatenate([p.ts for p in parts]),
                   np.concatenate([p.actual for p in parts]),
                   np.concatenate([p.predicted for p in parts]))

    @property
    def error(self) -> np.ndarray:
        return self.predicted - self.actual

    def __len__(self):
        return len(self.ts)

    def __iter__(self):
        for t, a, p in zip(self.ts, self.actual, self.predicted):
            yield ErrorSample(t, float(a), float(p))

    def select(self, mask) -> "ErrorSamples":
        return ErrorSamples(self.ts[mask], self.actual[mask], self.predicted[mask])


@dataclass
class MetricSet:
    mae: float
    rmse: float
    mape: float  # percent; NaN when every sample is below the floor
    me: float
    n: int
    n_excluded_mape: int

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


@dataclass
class MonthlySummary:
    model: str
    month: int
    n: int
    rmse: float
    me: float
    q01: float
    q10: float
    q90: float
    q99: float


def metrics(samples) -> MetricSet:
    """MAE, RMSE, ME and MAPE of a non-empty sample set.

    MAPE skips targets with ``|actual| < 0.1`` and is NaN if none remain.
    """
    s = ErrorSamples.of(samples)
    if len(s) == 0:
        raise InputError("metrics need at least one sample")
    e = s.error
    ae = np.abs(e)
    keep = np.abs(s.actual) >= MAPE_FLOOR
    mape = 100.0 * float(np.mean(ae[keep] / np.abs(s.actual[keep]))) if keep.any() else math.nan
    return MetricSet(
        mae=float(np.mean(ae)),
        rmse=math.sqrt(float(np.mean(e * e))),
        mape=mape,
        me=float(np.mean(e)),
        n=len(s),
        n_excluded_mape=int((~keep).sum()),
    )


def error_quantiles(errors, probs) -> np.ndarray:
    """Quantiles by linear interpolation at rank ``(n - 1) p``."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise InputError("error_quantiles needs at least one error")
    probs = np.asarray(probs, dtype=np.float64)
    if np.any((probs < 0) | (probs > 1)):
        raise InputError("probabilities must lie in [0, 1]")
    return np.array([quantile(errors, p) for p in np.ravel(probs)]).reshape(probs.shape)


def hourly_profile(samples) -> dict[int, MetricSet]:
    """Metrics per hour of day; hours without samples are absent."""
    s = ErrorSamples.of(samples)
    hod = hours_of_day(s.ts)
    return {h: metrics(s.select(hod == h)) for h in range(24) if np.any(hod == h)}


def monthly_summary(samples, model_id: str) -> list[MonthlySummary]:
    """One row per calendar month present: RMSE, ME and the 1/10/90/99 % error quantiles."""
    s = ErrorSamples.of(samples)
    mon = months(s.ts)
    rows = []
    for m in range(1, 13):
        sel = mon == m
        if not sel.any():
            continue
        part = s.select(sel)
        ms = metrics(part)
        q = error_quantiles(part.error, SUMMARY_PROBS)
        rows.append(MonthlySummary(model_id, m, ms.n, ms.rmse, ms.me, *map(float, q)))
    return rows


# -- predictions on held-out rows ---------------------------------------------

def predict_one_step(model: FittedModel, series: HourlySeries, subset: str = "test") -> ErrorSamples:
    """Predictions on the model's own regressor rows using actual lagged loads.

    ``subset`` is ``test``, ``train`` or ``all``. A segment without usable
    rows yields an empty sample set.
    """
    try:
        dm = build_design_matrix(series, model.segment, model.spec, model.scenario,
                                 model.dummies)
    except EmptySegmentError:
        return ErrorSamples.concat([])
    if subset == "test":
        dm = dm.test()
    elif subset == "train":
        dm = dm.train()
    elif subset != "all":
        raise InputError(f"unknown subset {subset!r}")
    return ErrorSamples(dm.ts, dm.y, model.predict(dm))


def predict_recursive(model: FittedModel, series: HourlySeries, horizon: int = 24) -> ErrorSamples:
    """Day-ahead recursive forecasts from midnight of every test day in the segment.

    Days whose history or exogenous inputs are incomplete are skipped;
    within a day, only hours with a usable actual load are scored.
    """
    ts = series.ts
    _, test = split_train_test(ts)
    days = np.unique(ts[test & segment_mask(ts, model.segment)].astype("datetime64[D]"))
    usable = series.usable("load")
    parts = []
    for day in days:
        origin = day.astype("datetime64[h]")
        req = ForecastRequest.from_series(model, series, origin, horizon)
        # keep the window inside the segment
        inside = segment_mask(req.timestamps, model.segment)
        stop = int(np.argmin(inside)) if not inside.all() else horizon
        if stop == 0:
            continue
        req.horizon = stop
        try:
            res = forecast_recursive(req)
        except InputError:
            continue
        pos = np.searchsorted(ts, res.ts)
        pos_c = np.minimum(pos, len(ts) - 1)
        hit = (ts[pos_c] == res.ts) & usable[pos_c]
        parts.append(ErrorSamples(res.ts[hit], series.load[pos_c[hit]], res.predicted[hit]))
    return ErrorSamples.concat(parts)


def predict(model: FittedModel, series: HourlySeries, mode: str = "one-step",
            horizon: int = 24) -> ErrorSamples:
    if mode == "one-step":
        return predict_one_step(model, series)
    if mode == "recursive":
        return predict_recursive(model, series, horizon)
    raise InputError(f"unknown evaluation mode {mode!r}")


@dataclass
class ComparisonCell:
    segment: str
    scenario: str
    n: int | None
    rmse: float | None
    mae: float | None
    mape: float | None
    me: float | None


def scenario_comparison(models: dict, series: HourlySeries, mode: str = "one-step") -> list[ComparisonCell]:
    """Test-set error table over every (segment, scenario) cell.

    ``models`` maps ``(SegmentKey, Scenario)`` to fitted models. Cells without
    a model or without test rows are reported with ``None`` values.
    """
    rows = []
    for seg in SEGMENTS:
        for sc in Scenario:
            model = models.get((seg, sc))
            samples = predict(model, series, mode) if model is not None else None
            if samples is None or len(samples) == 0:
                rows.append(ComparisonCell(seg.slug, sc.value, None, None, None, None, None))
                continue
            m = metrics(samples)
            rows.append(ComparisonCell(seg.slug, sc.value, m.n, m.rmse, m.mae,
                                       None if math.isnan(m.mape) else m.mape, m.me))
    return rows


# -- files --------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_samples(path, tagged) -> None:
    """``tagged`` yields ``(segment slug, scenario value, ErrorSamples)``."""
    rows = []
    for seg, sc, s in tagged:
        for t, a, p, e in zip(format_timestamps(s.ts), s.actual, s.predicted, s.error):
            rows.append((seg, sc, t, float(a), float(p), float(e)))
    write_rows(path, SAMPLES_HEADER, rows)


def read_samples(path) -> dict:
    """Inverse of ``write_samples``: ``{(segment, scenario): ErrorSamples}``."""
    groups: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SAMPLES_HEADER:
            raise InputError(f"{path}: expected header {','.join(SAMPLES_HEADER)}")
        for row in reader:
            if not row:
                continue
            g = groups.setdefault((row[0], row[1]), ([], [], []))
            g[0].append(parse_timestamp(row[2]))
            g[1].append(float(row[3]))
            g[2].append(float(row[4]))
    return {k: ErrorSamples(np.array(v[0], dtype="datetime64[h]"), v[1], v[2])
            for k, v in groups.items()}
