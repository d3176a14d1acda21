"""Lag-order search, calendar-dummy forward selection and model naming."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .calendar import DAY_NAMES, SegmentKey, eligible_hours, hour_of_week_index
from .errors import InputError, InsufficientDataError
from .features import (
    Column, DesignMatrix, LagSpec, Scenario, build_design_matrix, lag_columns,
)
from .ingest import HourlySeries
from .regression import FittedModel, fit_ols, information_criteria, solve_lstsq
from .stats import t_pvalue


@dataclass
class SelectionConfig:
    p_entry: float = 0.05
    variance_threshold: float = 1e-12
    max_dummies: int = 12
    na_pool: tuple = tuple(range(1, 13))
    nb_pool: tuple = tuple(range(0, 25))
    nc_pool: tuple = tuple(range(0, 25))

    def __post_init__(self):
        if not 0.0 < self.p_entry < 1.0:
            raise InputError("p_entry must lie in (0, 1)")
        if self.variance_threshold < 0 or self.max_dummies < 0:
            raise InputError("thresholds must be non-negative")
        self.na_pool = tuple(sorted(int(v) for v in self.na_pool))
        self.nb_pool = tuple(sorted(int(v) for v in self.nb_pool))
        self.nc_pool = tuple(sorted(int(v) for v in self.nc_pool))
        if not (self.na_pool and self.nb_pool and self.nc_pool):
            raise InputError("lag pools must be non-empty")
        # LagSpec validates the extremes
        LagSpec(self.na_pool[0], self.nb_pool[0], self.nc_pool[0])
        LagSpec(self.na_pool[-1], self.nb_pool[-1], self.nc_pool[-1])


@dataclass
class TraceEntry:
    step: int
    candidate: str
    p_value: float
    accepted: bool
    bic: float


@dataclass
class SelectionTrace:
    p_entry: float
    entries: list = field(default_factory=list)
    spec: LagSpec | None = None

    @property
    def admitted(self) -> list[str]:
        return [e.candidate for e in self.entries if e.accepted]

    def to_dict(self) -> dict:
        return {
            "p_entry": self.p_entry,
            "spec": None if self.spec is None else
            {"na": self.spec.na, "nb": self.spec.nb, "nc": self.spec.nc},
            "admitted": self.admitted,
            "entries": [
                {"step": e.step, "candidate": e.candidate, "p_value": e.p_value,
                 "accepted": e.accepted, "bic": e.bic}
                for e in self.entries
            ],
        }


class CompressedLstsq:
    """Fit many column subsets of one design against the same target.

    With ``[X | y] = Q R`` every subset problem ``min ||X_S b - y||`` equals
    ``min ||R_S b - r_y||``, so each candidate costs a solve on a
    ``(k+1) x |S|`` matrix instead of an ``n x |S|`` one.
    """

    def __init__(self, X, y):
        self.n = X.shape[0]
        R = np.linalg.qr(np.column_stack([X, y]), mode="r")
        self.R = np.ascontiguousarray(R[:, :-1])
        self.r_y = np.ascontiguousarray(R[:, -1])

    def fit(self, idx):
        return solve_lstsq(self.R[:, idx], self.r_y, n_obs=self.n)


def variance_filter(dm: DesignMatrix, threshold: float = 1e-12) -> list[Column]:
    """Columns whose sample variance reaches ``threshold``; the intercept always survives."""
    if dm.n < 2:
        var = np.zeros(dm.k)
    else:
        var = dm.X.var(axis=0, ddof=1)
    return [c for c, v in zip(dm.columns, var) if c.kind == "const" or v >= threshold]


def _candidate_specs(scenario: Scenario, config: SelectionConfig):
    nb_pool = config.nb_pool if scenario.uses_temperature else (0,)
    nc_pool = config.nc_pool if scenario.uses_irradiation else (0,)
    for na, nb, nc in itertools.product(config.na_pool, nb_pool, nc_pool):
        yield LagSpec(na, nb, nc)


def _demean_by_group(a: np.ndarray, groups: np.ndarray) -> np.ndarray:
    _, inv, counts = np.unique(groups, return_inverse=True, return_counts=True)
    out = np.array(a, dtype=np.float64, copy=True)
    cols = out.reshape(len(out), -1)
    for j in range(cols.shape[1]):
        cols[:, j] -= (np.bincount(inv, weights=cols[:, j]) / counts)[inv]
    return out


def lag_order_scores(series: HourlySeries, segment: SegmentKey, scenario: Scenario,
                     config: SelectionConfig | None = None,
                     time_of_week_controls: bool = False) -> dict:
    """BIC of every candidate lag spec, all fitted on one common training row set.

    With ``time_of_week_controls`` every candidate also carries a full set of
    hour-of-week effects, so lag orders are judged net of any time-of-week
    pattern. The effects are partialled out by demeaning within each
    hour-of-week slot, which leaves each candidate's residual sum of squares
    unchanged; their count still enters the BIC penalty.
    """
    config = config or SelectionConfig()
    scenario = Scenario(scenario)
    if scenario.uses_calendar:
        raise InputError("lag orders are searched without calendar dummies")
    top = LagSpec(config.na_pool[-1],
                  config.nb_pool[-1] if scenario.uses_temperature else 0,
                  config.nc_pool[-1] if scenario.uses_irradiation else 0)
    dm = build_design_matrix(series, segment, top, scenario).train()
    X, y = dm.X, dm.y
    n_fixed = 0
    if time_of_week_controls:
        groups = hour_of_week_index(dm.ts)
        n_fixed = len(np.unique(groups)) - 1
        X = _demean_by_group(X, groups)
        y = _demean_by_group(y, groups)
    if dm.n <= dm.k + n_fixed:
        raise InsufficientDataError(
            f"{segment.slug}: only {dm.n} training rows for the largest spec {top} "
            f"({dm.k + n_fixed} parameters); shrink the lag pools")
    comp = CompressedLstsq(X, y)
    pos = {c: i for i, c in enumerate(dm.columns)}
    scores = {}
    for spec in _candidate_specs(scenario, config):
        cols = lag_columns(spec, scenario)
        # under controls the slot means absorb the intercept
        idx = [pos[c] for c in cols if not (time_of_week_controls and c.kind == "const")]
        sol = comp.fit(idx)
        scores[spec] = information_criteria(sol.rss, dm.n, len(cols) + n_fixed)[1]
    return scores


def select_lag_orders(series: HourlySeries, segment: SegmentKey, scenario: Scenario,
                      config: SelectionConfig | None = None,
                      time_of_week_controls: bool = False) -> LagSpec:
    """Lag orders minimizing BIC over the pools.

    Ties go to fewer parameters, then to the lexicographically smallest
    ``(na, nb, nc)``.
    """
    scenario = Scenario(scenario)
    scores = lag_order_scores(series, segment, scenario, config, time_of_week_controls)
    return min(scores, key=lambda s: (scores[s], s.n_params(scenario), (s.na, s.nb, s.nc)))


def _entry_pvalue(sol, n: int, k: int) -> float:
    # p-value of the last column of the candidate fit
    if not sol.kept[-1]:
        return math.nan
    coef = sol.coef[-1]
    var = sol.rss / (n - k) * sol.xtx_inv_diag[-1]
    if var > 0:
        return t_pvalue(coef / math.sqrt(var), n - k)
    return 1.0 if coef == 0 else 0.0


def forward_select_calendar(series: HourlySeries, segment: SegmentKey, spec: LagSpec,
                            config: SelectionConfig | None = None):
    """Greedy admission of hour-of-week dummies on top of the irradiation model.

    Each step refits the current model plus one candidate at a time and
    admits the candidate with the smallest own p-value if it beats
    ``config.p_entry``. Returns the final training-data fit and the trace.
    """
    config = config or SelectionConfig()
    trace = SelectionTrace(config.p_entry, spec=spec)
    full = build_design_matrix(series, segment, spec, Scenario.PLUS_CALENDAR,
                               eligible_hours(segment.daytype)).train()
    base = lag_columns(spec, Scenario.PLUS_IRRADIATION)
    if full.n <= len(base):
        raise InsufficientDataError(f"{segment.slug}: {full.n} training rows for {len(base)} parameters")
    survivors = set(variance_filter(full, config.variance_threshold))
    remaining = [c for c in full.columns if c.kind == "dummy" and c in survivors]
    pos = {c: i for i, c in enumerate(full.columns)}
    comp = CompressedLstsq(full.X, full.y)
    admitted = []
    current = comp.fit([pos[c] for c in base])
    step = 0
    while remaining and len(admitted) < config.max_dummies and current.rss > 0:
        step += 1
        k = len(base) + len(admitted) + 1
        if full.n <= k:
            break
        head = [pos[c] for c in base + admitted]
        best = None
        step_entries = []
        for c in remaining:
            sol = comp.fit(head + [pos[c]])
            p = _entry_pvalue(sol, full.n, k)
            bic = information_criteria(sol.rss, full.n, sol.rank)[1]
            entry = TraceEntry(step, c.label, p, False, bic)
            step_entries.append(entry)
            if not math.isnan(p) and (best is None or p < best[0]):
                best = (p, c, entry, sol)
        trace.entries.extend(step_entries)
        if best is None or not best[0] < config.p_entry:
            break
        best[2].accepted = True
        admitted.append(best[1])
        remaining.remove(best[1])
        current = best[3]
    final = build_design_matrix(series, segment, spec, Scenario.PLUS_CALENDAR,
                                [c.hour for c in admitted]).train()
    return fit_ols(final), trace


def fit_segment(series: HourlySeries, segment: SegmentKey,
                scenario: Scenario = Scenario.PLUS_CALENDAR,
                config: SelectionConfig | None = None, spec: LagSpec | None = None):
    """Lag search, then (for the calendar scenario) forward selection, then the final fit.

    Passing ``spec`` skips the lag search. For the calendar scenario the
    search controls for hour-of-week effects, since the dummies admitted
    afterwards would otherwise be mimicked by long diurnal weather lags.
    """
    config = config or SelectionConfig()
    scenario = Scenario(scenario)
    search_scenario = Scenario.PLUS_IRRADIATION if scenario.uses_calendar else scenario
    if spec is None:
        spec = select_lag_orders(series, segment, search_scenario, config,
                                 time_of_week_controls=scenario.uses_calendar)
    if scenario.uses_calendar:
        return forward_select_calendar(series, segment, spec, config)
    model = fit_ols(build_design_matrix(series, segment, spec, scenario).train())
    return model, SelectionTrace(config.p_entry, spec=spec)


def model_name(model: FittedModel) -> str:
    """Compact name such as ``Q3_T1_I1 (MON_8h_TUE_1h_WED_3,7h)``.

    Dummies are grouped per day in Monday-to-Sunday order whatever their
    admission order.
    """
    cols = list(model.columns) + list(model.dropped)
    scenario = model.scenario
    if model.spec is not None:
        na, nb, nc = model.spec.na, model.spec.nb, model.spec.nc
        has_t = scenario is None or scenario.uses_temperature
        has_i = scenario is None or scenario.uses_irradiation
    else:
        lags = {kind: [c.lag for c in cols if c.kind == kind] for kind in ("load", "temp", "irr")}
        na = max(lags["load"], default=0)
        nb = max(lags["temp"], default=0)
        nc = max(lags["irr"], default=0)
        has_t, has_i = bool(lags["temp"]), bool(lags["irr"])
    name = f"Q{na}"
    if has_t:
        name += f"_T{nb}"
    if has_i:
        name += f"_I{nc}"
    hours = sorted(c.hour for c in cols if c.kind == "dummy")
    if hours:
        groups = []
        for dow, hs in itertools.groupby(hours, key=lambda h: h.dow):
            groups.append(f"{DAY_NAMES[dow]}_" + ",".join(str(h.hour) for h in hs) + "h")
        name += " (" + "_".join(groups) + ")"
    return name
