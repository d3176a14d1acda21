"""Seeded generator of district-heating-like hourly data from a known ARX truth.

Weather is produced at quarter-hour resolution and reduced with the same
resampler the ingest path uses, so the hourly temperature and irradiation
that drive the simulated load are bit-identical to what a re-read of the
written CSVs yields.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import kernels
from .calendar import (
    SEGMENTS, HourOfWeek, format_timestamps, hour_of_week_index, segment_mask,
)
from .errors import InputError
from .ingest import (
    LOAD_HEADER, WEATHER_HEADER, RawLoadRecord, RawWeatherRecord, resample_weather,
)
from .preprocess import BIN_WIDTH


@dataclass
class ProcessTruth:
    intercept: float = 12.0
    load_coefs: tuple = (0.5, 0.2, 0.1)
    temp_coefs: tuple = (-0.3, -0.2)
    irr_coefs: tuple = (-0.02, -0.01)
    dummies: dict = field(default_factory=dict)

    def __post_init__(self):
        self.load_coefs = tuple(float(v) for v in self.load_coefs)
        self.temp_coefs = tuple(float(v) for v in self.temp_coefs)
        self.irr_coefs = tuple(float(v) for v in self.irr_coefs)
        self.dummies = {HourOfWeek.from_label(k).label: float(v) for k, v in self.dummies.items()}
        if sum(abs(a) for a in self.load_coefs) >= 1.0:
            raise InputError(f"unstable autoregression: sum |a| = {sum(map(abs, self.load_coefs))} >= 1")


@dataclass
class GeneratorConfig:
    seed: int = 0
    start: str = "2013-01-01"
    end: str = "2015-01-01"
    noise_sd: float = 1.0
    truth: ProcessTruth = field(default_factory=ProcessTruth)
    segments: dict = field(default_factory=dict)  # segment slug -> ProcessTruth
    temp_mean: float = 6.0
    temp_seasonal_amp: float = 11.0
    temp_daily_amp: float = 2.0
    temp_noise_sd: float = 0.6     # per-quarter innovation of the AR(1) weather noise
    temp_noise_ar: float = 0.99
    irr_peak: float = 500.0
    outlier_rate: float = 0.0
    outlier_sd: float = 8.0
    gap_rate: float = 0.0
    max_gap_hours: int = 6

    def __post_init__(self):
        if isinstance(self.truth, dict):
            self.truth = ProcessTruth(**self.truth)
        self.segments = {
            k: (ProcessTruth(**v) if isinstance(v, dict) else v) for k, v in self.segments.items()
        }
        slugs = {s.slug for s in SEGMENTS}
        for k in self.segments:
            if k not in slugs:
                raise InputError(f"unknown segment {k!r} in generator config")
        if self.noise_sd < 0:
            raise InputError("noise_sd must be >= 0")
        if not 0 <= self.outlier_rate < 1 or not 0 <= self.gap_rate < 1:
            raise InputError("injection rates must lie in [0, 1)")
        if np.datetime64(self.end, "h") <= np.datetime64(self.start, "h"):
            raise InputError("end must be after start")

    @classmethod
    def from_mapping(cls, data: dict) -> "GeneratorConfig":
        """Build from a flat TOML-style mapping; truth keys sit at top level."""
        data = dict(data)
        truth_keys = {f.name for f in fields(ProcessTruth)}
        own_keys = {f.name for f in fields(cls)} - {"truth", "segments"}
        truth = {k: data.pop(k) for k in list(data) if k in truth_keys}
        segments = data.pop("segments", {})
        unknown = set(data) - own_keys
        if unknown:
            raise InputError(f"unknown generator keys: {', '.join(sorted(unknown))}")
        for k in ("start", "end"):
            if k in data:
                data[k] = str(data[k])
        return cls(truth=ProcessTruth(**truth), segments=segments, **data)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


@dataclass
class SyntheticData:
    load: list
    weather: list
    truth: dict

    def write(self, out_dir) -> dict:
        """Write ``load.csv``, ``weather.csv`` and ``truth.json``; return their paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"load": out / "load.csv", "weather": out / "weather.csv", "truth": out / "truth.json"}
        with open(paths["load"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LOAD_HEADER)
            ts = format_timestamps(np.array([r.ts for r in self.load], dtype="datetime64[h]"))
            w.writerows((t, repr(r.load)) for t, r in zip(ts, self.load))
        with open(paths["weather"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(WEATHER_HEADER)
            ts = np.datetime_as_string(np.array([r.ts for r in self.weather], dtype="datetime64[m]"),
                                       unit="m")
            w.writerows((t, repr(r.temperature), repr(r.irradiation))
                        for t, r in zip(ts, self.weather))
        paths["truth"].write_text(json.dumps(self.truth, indent=1, sort_keys=True) + "\n")
        return paths


def _truth_for_hours(config: GeneratorConfig, ts: np.ndarray):
    """Per-hour truth assignment: index into the returned list of truths."""
    truths = [config.truth]
    which = np.zeros(len(ts), dtype=np.int64)
    for seg in SEGMENTS:
        if seg.slug in config.segments:
            truths.append(config.segments[seg.slug])
            which[segment_mask(ts, seg)] = len(truths) - 1
    return truths, which


def generate(config: GeneratorConfig) -> SyntheticData:
    """Simulate the ARX process with the configured truth; deterministic per seed."""
    rng = np.random.default_rng(config.seed)
    burn = 48
    start = np.datetime64(config.start, "h")
    end = np.datetime64(config.end, "h")
    n_out = int((end - start).astype(np.int64))
    n = n_out + burn
    hours = start - np.timedelta64(burn, "h") + np.arange(n).astype("timedelta64[h]")

    # quarter-hour weather
    q_ts = hours.astype("datetime64[m]").repeat(4) + np.tile(np.arange(0, 60, 15), n).astype("timedelta64[m]")
    q_days = (q_ts - np.datetime64("2000-01-01T00:00")).astype(np.float64) / 1440.0
    day_frac = q_days % 1.0
    seasonal = -config.temp_seasonal_amp * np.cos(2 * np.pi * (q_days - 20.0) / 365.25)
    daily = -config.temp_daily_amp * np.cos(2 * np.pi * (day_frac - 4.0 / 24.0))
    innov = rng.normal(0.0, config.temp_noise_sd, size=4 * n)
    ar = kernels.simulate_ar(innov, np.full((4 * n, 1), config.temp_noise_ar), np.zeros(1))
    q_temp = config.temp_mean + seasonal + daily + ar
    sun = np.clip(np.sin(np.pi * (day_frac * 24.0 - 6.0) / 12.0), 0.0, None)
    season_gain = 0.55 - 0.45 * np.cos(2 * np.pi * (q_days - 172.0 + 182.6) / 365.25)
    cloud = rng.uniform(0.15, 1.0, size=n).repeat(4) * rng.uniform(0.9, 1.1, size=4 * n)
    q_irr = config.irr_peak * season_gain * sun * cloud

    # weather gaps: drop all quarter samples of the affected hours
    gap_hours = _gap_mask(rng, n, config) if config.gap_rate > 0 else (np.zeros(n, bool), np.zeros(n, bool))
    load_gap, weather_gap = gap_hours
    weather_gap[:burn] = False
    load_gap[:burn] = False
    keep_q = ~weather_gap.repeat(4)

    weather_records = [RawWeatherRecord(t, float(a), float(b))
                       for t, a, b in zip(q_ts, q_temp, q_irr)]
    hourly = resample_weather(weather_records)
    temp_h = hourly.temperature
    irr_h = hourly.irradiation

    # load process
    truths, which = _truth_for_hours(config, hours)
    p = max(len(t.load_coefs) for t in truths)
    coef_rows = np.zeros((n, p))
    drive = np.zeros(n)
    how = hour_of_week_index(hours)
    for j, truth in enumerate(truths):
        sel = which == j
        coef_rows[sel, :len(truth.load_coefs)] = truth.load_coefs
        part = np.full(n, truth.intercept)
        for k, b in enumerate(truth.temp_coefs):
            part[k:] += b * temp_h[:n - k]
        for k, c in enumerate(truth.irr_coefs):
            part[k:] += c * irr_h[:n - k]
        for label, offset in truth.dummies.items():
            part[how == HourOfWeek.from_label(label).index] += offset
        drive[sel] = part[sel]
    if config.noise_sd > 0:
        drive = drive + rng.normal(0.0, config.noise_sd, size=n)
    level = float(np.mean(drive[burn:burn + 24 * 7])) / max(1e-9, 1.0 - sum(config.truth.load_coefs))
    load = kernels.simulate_ar(drive, coef_rows, np.full(p, level))

    observed = load.copy()
    spikes = np.array([], dtype=np.int64)
    if config.outlier_rate > 0:
        spikes = _plant_spikes(rng, observed, temp_h, ~load_gap & ~weather_gap, burn, config)

    out = slice(burn, n)
    load_keep = ~load_gap[out]
    load_records = [RawLoadRecord(t, float(v))
                    for t, v, k in zip(hours[out], observed[out], load_keep) if k]
    weather_out = [r for r, k in zip(weather_records[4 * burn:], keep_q[4 * burn:]) if k]
    truth = {
        "config": _jsonable(config.to_dict()),
        "spikes": format_timestamps(hours[spikes]),
        "load_gaps": format_timestamps(hours[out][load_gap[out]]),
        "weather_gaps": format_timestamps(hours[out][weather_gap[out]]),
    }
    return SyntheticData(load_records, weather_out, truth)


def _gap_mask(rng, n, config):
    starts = np.nonzero(rng.random(n) < config.gap_rate)[0]
    lengths = rng.integers(1, config.max_gap_hours + 1, size=starts.size)
    kinds = rng.integers(0, 3, size=starts.size)  # 0 load, 1 weather, 2 both
    load_gap = np.zeros(n, bool)
    weather_gap = np.zeros(n, bool)
    for s, ln, kind in zip(starts, lengths, kinds):
        if kind in (0, 2):
            load_gap[s:s + ln] = True
        if kind in (1, 2):
            weather_gap[s:s + ln] = True
    return load_gap, weather_gap


def _plant_spikes(rng, observed, temp, present, burn, config):
    """Overwrite a random subset of loads with bin mean + ``outlier_sd`` bin standard deviations.

    Only hours in temperature bins holding at least 50 rows are eligible.
    """
    rows = np.nonzero(present & np.isfinite(temp))[0]
    rows = rows[rows >= burn]
    k = np.floor(temp[rows] / BIN_WIDTH).astype(np.int64)
    uniq, inv, counts = np.unique(k, return_inverse=True, return_counts=True)
    sums = np.bincount(inv, weights=observed[rows])
    mean = sums / counts
    sq = np.bincount(inv, weights=(observed[rows] - mean[inv]) ** 2)
    sd = np.sqrt(sq / np.maximum(counts - 1, 1))
    eligible = counts[inv] >= 50
    cand = np.nonzero(eligible)[0]
    pick = cand[rng.random(cand.size) < config.outlier_rate]
    idx = rows[pick]
    observed[idx] = mean[inv[pick]] + config.outlier_sd * sd[inv[pick]]
    return np.sort(idx)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
