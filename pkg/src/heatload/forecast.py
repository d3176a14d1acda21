"""Recursive multi-step forecasting from a fitted segment model."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .calendar import format_timestamps, hour_of_week_index, segment_mask, to_hour64
from .errors import InputError
from .ingest import HourlySeries
from .regression import FittedModel

PREDICTIONS_HEADER = ["timestamp", "predicted_kwh", "lag_source"]


@dataclass(frozen=True)
class Orders:
    """Effective lag orders of a model; ``nb``/``nc`` are -1 when the input is unused."""

    na: int
    nb: int
    nc: int

    @classmethod
    def of(cls, model: FittedModel) -> "Orders":
        cols = list(model.columns) + list(model.dropped)
        if model.spec is not None and model.scenario is not None:
            s = model.spec
            return cls(s.na,
                       s.nb if model.scenario.uses_temperature else -1,
                       s.nc if model.scenario.uses_irradiation else -1)
        lags = {kind: [c.lag for c in cols if c.kind == kind] for kind in ("load", "temp", "irr")}
        return cls(max(lags["load"], default=0), max(lags["temp"], default=-1),
                   max(lags["irr"], default=-1))

    @property
    def exog_lead(self) -> int:
        return max(self.nb, self.nc, 0)


@dataclass
class ForecastRequest:
    """Inputs for one forecast window.

    ``history`` holds loads for the hours immediately before ``origin``,
    oldest first; only the last ``na`` are used. ``exog_ts`` with
    ``temperature`` and ``irradiation`` must cover
    ``[origin - max(nb, nc), origin + horizon - 1]`` for the inputs the
    model uses.
    """

    model: FittedModel
    origin: np.datetime64
    history: np.ndarray
    exog_ts: np.ndarray
    temperature: np.ndarray
    irradiation: np.ndarray
    horizon: int = 24

    def __post_init__(self):
        self.origin = to_hour64(self.origin)
        self.history = np.asarray(self.history, dtype=np.float64)
        self.exog_ts = np.asarray(self.exog_ts, dtype="datetime64[h]")
        self.temperature = np.asarray(self.temperature, dtype=np.float64)
        self.irradiation = np.asarray(self.irradiation, dtype=np.float64)
        if int(self.horizon) < 1:
            raise InputError("horizon must be >= 1")
        self.horizon = int(self.horizon)
        if not len(self.exog_ts) == len(self.temperature) == len(self.irradiation):
            raise InputError("exogenous columns differ in length")

    @property
    def timestamps(self) -> np.ndarray:
        return self.origin + np.arange(self.horizon).astype("timedelta64[h]")

    @classmethod
    def from_series(cls, model: FittedModel, series: HourlySeries, origin,
                    horizon: int = 24) -> "ForecastRequest":
        """History and exogenous inputs taken from an hourly series.

        Loads are only taken before ``origin``; non-usable values become NaN
        so that gaps are reported by the forecast itself.
        """
        origin = to_hour64(origin)
        orders = Orders.of(model)
        load = np.where(series.usable("load"), series.load, np.nan)
        temp = np.where(series.usable("temperature"), series.temperature, np.nan)
        irr = np.where(series.usable("irradiation"), series.irradiation, np.nan)
        hist_ts = origin - np.arange(orders.na, 0, -1).astype("timedelta64[h]")
        history = _lookup(series.ts, load, hist_ts)
        lo = origin - np.timedelta64(orders.exog_lead, "h")
        exog_ts = lo + np.arange(orders.exog_lead + horizon).astype("timedelta64[h]")
        return cls(model, origin, history, exog_ts, _lookup(series.ts, temp, exog_ts),
                   _lookup(series.ts, irr, exog_ts), horizon)


@dataclass
class ForecastResult:
    ts: np.ndarray
    predicted: np.ndarray
    lag_source: list

    def __len__(self):
        return len(self.ts)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(PREDICTIONS_HEADER)
            for t, p, s in zip(format_timestamps(self.ts), self.predicted, self.lag_source):
                w.writerow([t, repr(float(p)), s])


def _lookup(ts, values, want):
    # values at timestamps ``want``; NaN where absent from ``ts``
    out = np.full(len(want), np.nan)
    if len(ts) == 0:
        return out
    pos = np.searchsorted(ts, want)
    pos_c = np.minimum(pos, len(ts) - 1)
    hit = ts[pos_c] == want
    out[hit] = values[pos_c[hit]]
    return out


def _lag_sources(na: int, horizon: int) -> list[str]:
    out = []
    for h in range(1, horizon + 1):
        if h == 1 or na == 0:
            out.append("actual")
        elif h > na:
            out.append("predicted")
        else:
            out.append("mixed")
    return out


def _exog_window(req: ForecastRequest, values, order: int, name: str):
    # values for [origin - order, origin + horizon - 1], oldest first
    lo = req.origin - np.timedelta64(order, "h")
    want = lo + np.arange(order + req.horizon).astype("timedelta64[h]")
    got = _lookup(req.exog_ts, values, want)
    bad = ~np.isfinite(got)
    if bad.any():
        first = format_timestamps(want[bad][:1])[0]
        raise InputError(f"{name} input missing at {first}")
    return got


def forecast_recursive(req: ForecastRequest) -> ForecastResult:
    """Predict ``horizon`` hours from ``origin`` feeding predictions back as load lags.

    The noise term is replaced by its zero mean. Raises ``InputError`` when
    a forecast hour lies outside the model's segment, when the load history
    is short or has a gap, or when an exogenous value is missing.
    """
    model = req.model
    ts = req.timestamps
    if model.segment is not None:
        outside = ~segment_mask(ts, model.segment)
        if outside.any():
            first = format_timestamps(ts[outside][:1])[0]
            raise InputError(f"forecast hour {first} is outside segment {model.segment.slug}")
    orders = Orders.of(model)
    if len(req.history) < orders.na:
        raise InputError(f"load history has {len(req.history)} values, model needs {orders.na}")
    history = req.history[len(req.history) - orders.na:]
    if not np.all(np.isfinite(history)):
        raise InputError("load history has a gap in the last "
                         f"{orders.na} hours before {format_timestamps(ts[:1])[0]}")

    load_coef = np.array([model.coefficient(f"Q{k}") for k in range(1, orders.na + 1)])
    temp_coef = np.array([model.coefficient(f"T{k}") for k in range(orders.nb + 1)])
    irr_coef = np.array([model.coefficient(f"I{k}") for k in range(orders.nc + 1)])
    temp = _exog_window(req, req.temperature, orders.nb, "temperature") if orders.nb >= 0 else np.empty(0)
    irr = _exog_window(req, req.irradiation, orders.nc, "irradiation") if orders.nc >= 0 else np.empty(0)

    offset = np.full(req.horizon, model.coefficient("const"))
    how = hour_of_week_index(ts)
    for c, b in zip(model.columns, model.coef):
        if c.kind == "dummy":
            offset[how == c.lag] += b
    pred = kernels.arx_recursion(offset, load_coef, temp_coef, irr_coef, history, temp, irr)
    return ForecastResult(ts, pred, _lag_sources(orders.na, req.horizon))
