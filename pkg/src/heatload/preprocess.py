"""Temperature-binned IQR outlier screening and short-gap weather imputation."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .ingest import HourlySeries, Quality

BIN_WIDTH = 2.5
IQR_FACTOR = 1.5
MIN_BIN_ROWS = 8
MAX_IMPUTE_GAP = 3


@dataclass
class BinStats:
    lower: float
    upper: float
    n: int
    q1: float
    q3: float
    iqr: float
    low_fence: float
    high_fence: float
    flagged: int


@dataclass
class OutlierReport:
    flagged: np.ndarray  # row indices into the screened series
    bins: list = field(default_factory=list)
    n_load_rows: int = 0

    @property
    def flagged_fraction(self) -> float:
        return len(self.flagged) / self.n_load_rows if self.n_load_rows else 0.0

    def to_dict(self) -> dict:
        return {
            "bin_width_c": BIN_WIDTH,
            "iqr_factor": IQR_FACTOR,
            "min_bin_rows": MIN_BIN_ROWS,
            "n_load_rows": self.n_load_rows,
            "n_flagged": int(len(self.flagged)),
            "flagged_fraction": self.flagged_fraction,
            "bins": [_clean_nan(asdict(b)) for b in self.bins],
        }


def _clean_nan(d):
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


def quantile(values, p):
    """Order-statistic quantile with linear interpolation at rank ``(n - 1) * p``."""
    return np.quantile(np.asarray(values, dtype=np.float64), p, method="linear")


def detect_outliers_iqr(series: HourlySeries, width: float = BIN_WIDTH,
                        factor: float = IQR_FACTOR, min_rows: int = MIN_BIN_ROWS) -> OutlierReport:
    """Flag loads outside ``[Q1 - 1.5 IQR, Q3 + 1.5 IQR]`` of their temperature bin.

    Bins are ``[2.5 k, 2.5 (k + 1))`` degrees C. Only rows with both a load
    value and a usable temperature take part; bins with fewer than
    ``min_rows`` participants flag nothing.
    """
    has_load = np.isfinite(series.load) & (series.load_quality != Quality.MISSING)
    part = has_load & series.usable("temperature")
    rows = np.nonzero(part)[0]
    flagged = []
    bins = []
    if rows.size:
        k = np.floor(series.temperature[rows] / width).astype(np.int64)
        order = np.argsort(k, kind="stable")
        k_sorted = k[order]
        starts = np.r_[0, np.nonzero(np.diff(k_sorted))[0] + 1]
        ends = np.r_[starts[1:], len(k_sorted)]
        for s, e in zip(starts, ends):
            idx = rows[order[s:e]]
            values = series.load[idx]
            lower = float(k_sorted[s] * width)
            if len(idx) < min_rows:
                bins.append(BinStats(lower, lower + width, len(idx), math.nan, math.nan,
                                     math.nan, math.nan, math.nan, 0))
                continue
            q1, q3 = quantile(values, [0.25, 0.75])
            iqr = q3 - q1
            lo, hi = q1 - factor * iqr, q3 + factor * iqr
            out = idx[(values < lo) | (values > hi)]
            flagged.append(out)
            bins.append(BinStats(lower, lower + width, len(idx), float(q1), float(q3),
                                 float(iqr), float(lo), float(hi), len(out)))
    flagged = np.sort(np.concatenate(flagged)) if flagged else np.array([], dtype=np.int64)
    return OutlierReport(flagged.astype(np.int64), bins, int(has_load.sum()))


def mark_outliers(series: HourlySeries, report: OutlierReport) -> HourlySeries:
    out = series.copy()
    out.load_quality[report.flagged] = Quality.OUTLIER
    return out


def impute(series: HourlySeries, max_gap: int = MAX_IMPUTE_GAP) -> HourlySeries:
    """Linearly fill temperature and irradiation gaps of at most ``max_gap`` hours.

    A gap qualifies only when usable values flank it on both sides within
    ``max_gap + 1`` hours. Load is never imputed.
    """
    out = series.copy()
    t = series.ts.astype(np.int64)
    for name in ("temperature", "irradiation"):
        values = getattr(out, name)
        quality = getattr(out, f"{name}_quality")
        ok = series.usable(name)
        good = np.nonzero(ok)[0]
        if good.size < 2:
            continue
        left, right = good[:-1], good[1:]
        span = t[right] - t[left]
        holes = (right - left > 1) & (span - 1 <= max_gap)
        for a, b in zip(left[holes], right[holes]):
            mid = np.arange(a + 1, b)
            w = (t[mid] - t[a]) / (t[b] - t[a])
            values[mid] = values[a] + w * (values[b] - values[a])
            quality[mid] = Quality.IMPUTED
    return out


def clean(series: HourlySeries) -> tuple[HourlySeries, OutlierReport]:
    """Outlier screening followed by weather imputation."""
    report = detect_outliers_iqr(series)
    return impute(mark_outliers(series, report)), report
