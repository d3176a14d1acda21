"""Figure data tables and static SVG charts built from evaluation outputs.

Five families are produced, each as one CSV and one 800x600 SVG:
predicted vs actual scatter, error vs predicted scatter, per-scenario error
bars, hourly error profiles per month and monthly error histograms with
their 10 % and 90 % quantiles.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .calendar import format_timestamps, hours_of_day, months
from .errors import InputError
from .evaluation import ComparisonCell, error_quantiles, metrics, write_rows
from .features import Scenario

WIDTH, HEIGHT = 800, 600
MARGIN = 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
HIST_WIDTH = 1.0

FAMILIES = {
    "scatter": "predicted_vs_actual",
    "residuals": "error_vs_predicted",
    "scenarios": "scenario_errors",
    "hourly": "hourly_profiles",
    "histograms": "error_histograms",
}


def primary_samples(samples: dict) -> dict:
    """Per segment, the samples of the richest scenario available."""
    out = {}
    order = [s.value for s in Scenario]
    for (seg, sc), s in sorted(samples.items()):
        if seg not in out or order.index(sc) > order.index(out[seg][0]):
            out[seg] = (sc, s)
    return {seg: s for seg, (_, s) in sorted(out.items())}


def histogram(errors, width: float = HIST_WIDTH):
    """Counts in bins of ``width`` centred on 0, i.e. edges at ``(i +- 1/2) width``."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        return np.array([]), np.array([]), np.array([], dtype=np.int64)
    idx = np.floor(errors / width + 0.5).astype(np.int64)
    lo, hi = int(idx.min()), int(idx.max())
    counts = np.bincount(idx - lo, minlength=hi - lo + 1)
    centers = np.arange(lo, hi + 1)
    return (centers - 0.5) * width, (centers + 0.5) * width, counts


# -- tables -------------------------------------------------------------------

def scatter_rows(primary: dict):
    for seg, s in primary.items():
        for t, a, p in zip(format_timestamps(s.ts), s.actual, s.predicted):
            yield seg, t, float(a), float(p)


def residuals_rows(primary: dict):
    for seg, s in primary.items():
        for t, p, e in zip(format_timestamps(s.ts), s.predicted, s.error):
            yield seg, t, float(p), float(e)


def hourly_rows(primary: dict):
    for seg, s in primary.items():
        mon, hod = months(s.ts), hours_of_day(s.ts)
        for m in range(1, 13):
            for h in range(24):
                sel = (mon == m) & (hod == h)
                if sel.any():
                    ms = metrics(s.select(sel))
                    yield seg, m, h, ms.n, ms.mae, ms.rmse, ms.mape


def histograms_rows(primary: dict):
    for seg, s in primary.items():
        mon = months(s.ts)
        for m in range(1, 13):
            e = s.error[mon == m]
            if e.size == 0:
                continue
            q10, q90 = error_quantiles(e, (0.1, 0.9))
            for lo, hi, c in zip(*histogram(e)):
                yield seg, m, float(lo), float(hi), int(c), float(q10), float(q90)


HEADERS = {
    "scatter": ["segment", "timestamp", "actual_kwh", "predicted_kwh"],
    "residuals": ["segment", "timestamp", "predicted_kwh", "error_kwh"],
    "scenarios": ["segment", "scenario", "n", "rmse", "mae", "mape", "me"],
    "hourly": ["segment", "month", "hour", "n", "mae", "rmse", "mape"],
    "histograms": ["segment", "month", "bin_lo", "bin_hi", "count", "q10", "q90"],
}


# -- SVG ------------------------------------------------------------------------

def _n(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH // 2}" y="28" text-anchor="middle" font-size="16" '
            f'font-family="sans-serif">{_esc(title)}</text>',
        ]

    def frame(self, xlim, ylim, xlabel, ylabel):
        self.xlim, self.ylim = _pad(xlim), _pad(ylim)
        x0, y0, x1, y1 = MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN // 2, MARGIN
        self.parts.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
                          'fill="none" stroke="black"/>')
        for v in np.linspace(*self.xlim, 5):
            x = self.px(v)
            self.parts.append(f'<text x="{_n(x)}" y="{y0 + 16}" text-anchor="middle" '
                              f'font-size="11" font-family="sans-serif">{v:.3g}</text>')
        for v in np.linspace(*self.ylim, 5):
            y = self.py(v)
            self.parts.append(f'<text x="{x0 - 6}" y="{_n(y + 4)}" text-anchor="end" '
                              f'font-size="11" font-family="sans-serif">{v:.3g}</text>')
        self.parts.append(f'<text x="{(x0 + x1) // 2}" y="{HEIGHT - 16}" text-anchor="middle" '
                          f'font-size="13" font-family="sans-serif">{_esc(xlabel)}</text>')
        self.parts.append(f'<text x="16" y="{(y0 + y1) // 2}" text-anchor="middle" font-size="13" '
                          f'font-family="sans-serif" transform="rotate(-90 16 {(y0 + y1) // 2})">'
                          f'{_esc(ylabel)}</text>')

    def px(self, v):
        lo, hi = self.xlim
        return MARGIN + (v - lo) / (hi - lo) * (WIDTH - MARGIN - MARGIN // 2)

    def py(self, v):
        lo, hi = self.ylim
        return HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2 * MARGIN)

    def points(self, xs, ys, color):
        for x, y in zip(xs, ys):
            self.parts.append(f'<circle cx="{_n(self.px(x))}" cy="{_n(self.py(y))}" r="1.5" '
                              f'fill="{color}" fill-opacity="0.5"/>')

    def line(self, xs, ys, color, dash=False):
        pts = " ".join(f"{_n(self.px(x))},{_n(self.py(y))}" for x, y in zip(xs, ys))
        extra = ' stroke-dasharray="6,4"' if dash else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}"{extra}/>')

    def bar(self, x_lo, x_hi, y, color):
        x0, x1 = self.px(x_lo), self.px(x_hi)
        ytop, ybase = self.py(y), self.py(max(self.ylim[0], 0.0))
        self.parts.append(f'<rect x="{_n(x0)}" y="{_n(min(ytop, ybase))}" width="{_n(x1 - x0)}" '
                          f'height="{_n(abs(ybase - ytop))}" fill="{color}"/>')

    def legend(self, labels):
        for i, (label, color) in enumerate(labels):
            y = MARGIN + 16 + 16 * i
            self.parts.append(f'<rect x="{MARGIN + 10}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
            self.parts.append(f'<text x="{MARGIN + 26}" y="{y}" font-size="11" '
                              f'font-family="sans-serif">{_esc(label)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _pad(lim):
    lo, hi = float(lim[0]), float(lim[1])
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return 0.0, 1.0
    if hi <= lo:
        return lo - 0.5, hi + 0.5
    return lo, hi


def _limits(arrays):
    vals = [a for a in arrays if len(a)]
    if not vals:
        return 0.0, 1.0
    cat = np.concatenate(vals)
    return float(cat.min()), float(cat.max())


def svg_scatter(primary: dict) -> str:
    c = _Canvas("Predicted vs actual heat load")
    lim = _limits([s.actual for s in primary.values()] + [s.predicted for s in primary.values()])
    c.frame(lim, lim, "actual (kWh)", "predicted (kWh)")
    for i, s in enumerate(primary.values()):
        c.points(s.actual, s.predicted, PALETTE[i % len(PALETTE)])
    c.line(c.xlim, c.xlim, "black", dash=True)
    c.legend([(seg, PALETTE[i % len(PALETTE)]) for i, seg in enumerate(primary)])
    return c.render()


def svg_residuals(primary: dict) -> str:
    c = _Canvas("Forecast error vs predicted heat load")
    c.frame(_limits([s.predicted for s in primary.values()]),
            _limits([s.error for s in primary.values()]), "predicted (kWh)", "error (kWh)")
    for i, s in enumerate(primary.values()):
        c.points(s.predicted, s.error, PALETTE[i % len(PALETTE)])
    c.line(c.xlim, (0.0, 0.0), "black", dash=True)
    c.legend([(seg, PALETTE[i % len(PALETTE)]) for i, seg in enumerate(primary)])
    return c.render()


def svg_scenarios(cells) -> str:
    c = _Canvas("Test RMSE per segment and data scenario")
    segs = sorted({r.segment for r in cells})
    scen = [s.value for s in Scenario]
    vals = [r.rmse for r in cells if r.rmse is not None]
    c.frame((0, max(len(segs), 1)), (0.0, max(vals, default=1.0)), "segment", "RMSE (kWh)")
    w = 0.8 / len(scen)
    for r in cells:
        if r.rmse is None:
            continue
        x = segs.index(r.segment) + 0.1 + scen.index(r.scenario) * w
        c.bar(x, x + w, r.rmse, PALETTE[scen.index(r.scenario) % len(PALETTE)])
    for i, seg in enumerate(segs):
        c.parts.append(f'<text x="{_n(c.px(i + 0.5))}" y="{HEIGHT - MARGIN - 4}" text-anchor="middle" '
                       f'font-size="10" font-family="sans-serif">{_esc(seg)}</text>')
    c.legend([(s, PALETTE[i % len(PALETTE)]) for i, s in enumerate(scen)])
    return c.render()


def svg_hourly(primary: dict) -> str:
    c = _Canvas("Hourly RMSE per segment")
    profiles = []
    for s in primary.values():
        hod = hours_of_day(s.ts)
        hours = [h for h in range(24) if np.any(hod == h)]
        profiles.append((hours, [metrics(s.select(hod == h)).rmse for h in hours]))
    c.frame((0, 23), (0.0, max((max(v) for _, v in profiles if v), default=1.0)),
            "hour of day", "RMSE (kWh)")
    for i, (hours, vals) in enumerate(profiles):
        if hours:
            c.line(hours, vals, PALETTE[i % len(PALETTE)])
            c.points(hours, vals, PALETTE[i % len(PALETTE)])
    c.legend([(seg, PALETTE[i % len(PALETTE)]) for i, seg in enumerate(primary)])
    return c.render()


def svg_histograms(primary: dict) -> str:
    c = _Canvas("Forecast error histogram with 10% and 90% quantiles")
    errors = [s.error for s in primary.values()]
    lo_e, hi_e = _limits(errors)
    hists = [histogram(e) for e in errors]
    top = max((int(h[2].max()) for h in hists if h[2].size), default=1)
    c.frame((math.floor(lo_e) - 0.5, math.ceil(hi_e) + 0.5), (0.0, top), "error (kWh)", "count")
    for i, (lo, hi, counts) in enumerate(hists):
        color = PALETTE[i % len(PALETTE)]
        for a, b, n in zip(lo, hi, counts):
            c.bar(a, b, n, color)
    for i, e in enumerate(errors):
        if e.size:
            for q in error_quantiles(e, (0.1, 0.9)):
                c.line((q, q), c.ylim, PALETTE[i % len(PALETTE)], dash=True)
    c.legend([(seg, PALETTE[i % len(PALETTE)]) for i, seg in enumerate(primary)])
    return c.render()


def write_report(samples: dict, cells, out_dir) -> list[Path]:
    """Write the five CSV families and their SVGs; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    primary = primary_samples(samples)
    if not primary:
        raise InputError("no evaluation samples to report")
    scenarios_rows = ((r.segment, r.scenario, r.n, r.rmse, r.mae, r.mape, r.me) for r in cells)
    tables = {
        "scatter": scatter_rows(primary),
        "residuals": residuals_rows(primary),
        "scenarios": scenarios_rows,
        "hourly": hourly_rows(primary),
        "histograms": histograms_rows(primary),
    }
    svgs = {
        "scatter": svg_scatter(primary),
        "residuals": svg_residuals(primary),
        "scenarios": svg_scenarios(cells),
        "hourly": svg_hourly(primary),
        "histograms": svg_histograms(primary),
    }
    paths = []
    for key, stem in FAMILIES.items():
        csv_path = out / f"{stem}.csv"
        write_rows(csv_path, HEADERS[key], tables[key])
        svg_path = out / f"{stem}.svg"
        svg_path.write_text(svgs[key], encoding="utf-8")
        paths += [csv_path, svg_path]
    return paths


def read_comparison(path):
    """Rows of a scenario comparison CSV as ``ComparisonCell`` objects."""
    def opt(v, cast):
        return None if v == "" else cast(v)

    cells = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HEADERS["scenarios"]:
            raise InputError(f"{path}: expected header {','.join(HEADERS['scenarios'])}")
        for row in reader:
            if row:
                cells.append(ComparisonCell(row[0], row[1], opt(row[2], int), opt(row[3], float),
                                            opt(row[4], float), opt(row[5], float), opt(row[6], float)))
    return cells
