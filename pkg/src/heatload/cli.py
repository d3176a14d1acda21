"""Command-line front end: synth, clean, fit, forecast, evaluate, report and pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .calendar import SEGMENTS, SegmentKey, format_timestamps, parse_timestamp
from .errors import EmptySegmentError, HeatLoadError, InputError, InsufficientDataError, NumericalError
from .evaluation import (
    hourly_profile, metrics, monthly_summary, predict, read_samples, scenario_comparison,
    write_rows, write_samples,
)
from .features import Scenario
from .forecast import ForecastRequest, forecast_recursive
from .ingest import HourlySeries, load_series
from .preprocess import clean
from .regression import FittedModel
from .report import HEADERS, read_comparison, write_report
from .selection import SelectionConfig, fit_segment
from .synthetic import GeneratorConfig, generate

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("heatload")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3
MODES = ("one-step", "recursive")
FIT_SUMMARY_HEADER = ["segment", "scenario", "name", "n", "k", "r2", "adj_r2", "f", "prob_f", "aic", "bic"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class PipelineConfig:
    load: str | None = None
    weather: str | None = None
    series: str | None = None
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    scenario: str = Scenario.PLUS_CALENDAR.value
    segments: tuple = tuple(s.slug for s in SEGMENTS)
    horizon: int = 24
    mode: str = "one-step"
    synth: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario != "all":
            self.scenario = Scenario(self.scenario).value
        for s in self.segments:
            SegmentKey.parse(s)
        if self.mode not in MODES:
            raise InputError(f"evaluation mode must be one of {', '.join(MODES)}")
        if int(self.horizon) < 1:
            raise InputError("horizon must be >= 1")

    @property
    def scenarios(self) -> list[Scenario]:
        return list(Scenario) if self.scenario == "all" else [Scenario(self.scenario)]

    @property
    def segment_keys(self) -> list[SegmentKey]:
        return [SegmentKey.parse(s) for s in self.segments]

    @classmethod
    def from_toml(cls, data: dict) -> "PipelineConfig":
        pipe = dict(data.get("pipeline", {}))
        sel = data.get("selection", {})
        known = {"load", "weather", "series", "scenario", "segments", "horizon", "mode"}
        unknown = set(pipe) - known
        if unknown:
            raise InputError(f"unknown [pipeline] keys: {', '.join(sorted(unknown))}")
        try:
            selection = SelectionConfig(**sel)
        except TypeError as exc:
            raise InputError(f"bad [selection] section: {exc}") from None
        if "segments" in pipe:
            pipe["segments"] = tuple(pipe["segments"])
        return cls(selection=selection, synth=dict(data.get("synth", {})), **pipe)


def load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    return PipelineConfig.from_toml(data)


# -- manifest -------------------------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command: str, settings: dict) -> Path:
    """List every file under ``out_dir`` with its size and SHA-256; no timestamps."""
    out = Path(out_dir)
    target = out / "manifest.json"
    files = sorted(p for p in out.rglob("*") if p.is_file() and p != target)
    entries = [{"path": p.relative_to(out).as_posix(), "bytes": p.stat().st_size,
                "sha256": sha256_file(p)} for p in files]
    doc = {"command": command, "version": __version__, "settings": settings, "artifacts": entries}
    target.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return target


def _settings(cfg: PipelineConfig, **extra) -> dict:
    sel = cfg.selection
    d = {
        "scenario": cfg.scenario, "segments": list(cfg.segments),
        "horizon": cfg.horizon, "mode": cfg.mode,
        "selection": {"p_entry": sel.p_entry, "variance_threshold": sel.variance_threshold,
                      "max_dummies": sel.max_dummies, "na_pool": list(sel.na_pool),
                      "nb_pool": list(sel.nb_pool), "nc_pool": list(sel.nc_pool)},
    }
    d.update(extra)
    return d


def _require(path, what: str) -> Path:
    if path is None:
        raise UsageError(f"missing {what}")
    p = Path(path)
    if not p.exists():
        raise InputError(f"{what} not found: {p}")
    return p


# -- stages ---------------------------------------------------------------------

def run_synth(cfg: PipelineConfig, out: Path, seed: int | None) -> dict:
    mapping = dict(cfg.synth)
    if seed is not None:
        mapping["seed"] = seed
    gen_cfg = GeneratorConfig.from_mapping(mapping)
    paths = generate(gen_cfg).write(out)
    log.info("synthetic data written to %s", out)
    return paths


def run_clean(load_path, weather_path, out: Path) -> Path:
    series = load_series(load_path, weather_path)
    cleaned, report = clean(series)
    out.mkdir(parents=True, exist_ok=True)
    cleaned.to_csv(out / "series.csv")
    (out / "outliers.json").write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n",
                                      encoding="utf-8")
    log.info("flagged %d of %d load rows as outliers (%.2f%%)", len(report.flagged),
             report.n_load_rows, 100 * report.flagged_fraction)
    return out / "series.csv"


def model_path(out: Path, seg: SegmentKey, sc: Scenario) -> Path:
    return out / "models" / f"{seg.slug}.{sc.value}.json"


def run_fit(cfg: PipelineConfig, series: HourlySeries, out: Path) -> dict:
    """Fit every requested (segment, scenario) cell; empty segments are skipped with a warning."""
    (out / "models").mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    fitted = {}
    rows = []
    for seg in cfg.segment_keys:
        for sc in cfg.scenarios:
            try:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    model, trace = fit_segment(series, seg, sc, cfg.selection)
                for w in caught:
                    log.warning("%s %s: %s", seg.slug, sc.value, w.message)
            except (EmptySegmentError, InsufficientDataError) as exc:
                log.warning("skipping %s %s: %s", seg.slug, sc.value, exc)
                continue
            fitted[(seg, sc)] = model
            model_path(out, seg, sc).write_text(model.to_json() + "\n", encoding="utf-8")
            (out / "traces" / f"{seg.slug}.{sc.value}.trace.json").write_text(
                json.dumps(trace.to_dict(), indent=1) + "\n", encoding="utf-8")
            rows.append((seg.slug, sc.value, model.name, model.n, model.k, model.r2, model.adj_r2,
                         model.f, model.prob_f, model.aic, model.bic))
            print(f"{seg.slug:16s} {sc.value:17s} {model.name}")
    write_rows(out / "fit_summary.csv", FIT_SUMMARY_HEADER, rows)
    if not fitted:
        raise EmptySegmentError("no segment could be fitted", "all")
    return fitted


def read_models(models_dir: Path) -> dict:
    if not models_dir.is_dir():
        raise InputError(f"model directory not found: {models_dir}")
    models = {}
    for p in sorted(models_dir.glob("*.json")):
        try:
            m = FittedModel.from_json(p.read_text(encoding="utf-8"))
        except (ValueError, KeyError) as exc:
            raise InputError(f"{p}: not a model file ({exc})") from None
        if m.segment is None or m.scenario is None:
            raise InputError(f"{p}: model lacks segment or scenario")
        models[(m.segment, m.scenario)] = m
    if not models:
        raise InputError(f"no model files in {models_dir}")
    return models


def run_evaluate(cfg: PipelineConfig, series: HourlySeries, models: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    tagged = []
    summary = {}
    monthly = []
    hourly = []
    for (seg, sc), model in sorted(models.items(), key=lambda kv: (kv[0][0].slug, kv[0][1].level)):
        s = predict(model, series, cfg.mode, cfg.horizon)
        tagged.append((seg.slug, sc.value, s))
        if len(s) == 0:
            log.warning("%s %s: no test rows", seg.slug, sc.value)
            continue
        model_id = f"{seg.slug}.{sc.value}"
        summary[model_id] = {"name": model.name, **metrics(s).to_dict()}
        monthly += monthly_summary(s, model_id)
        for h, ms in hourly_profile(s).items():
            hourly.append((seg.slug, sc.value, h, ms.n, ms.mae, ms.rmse, ms.mape, ms.me))
    write_samples(out / "samples.csv", tagged)
    (out / "metrics.json").write_text(json.dumps({"mode": cfg.mode, "models": summary},
                                                 indent=1, sort_keys=True) + "\n", encoding="utf-8")
    write_rows(out / "monthly_summary.csv",
               ["model", "month", "n", "rmse", "me", "q01", "q10", "q90", "q99"],
               [(r.model, r.month, r.n, r.rmse, r.me, r.q01, r.q10, r.q90, r.q99) for r in monthly])
    write_rows(out / "hourly_profile.csv",
               ["segment", "scenario", "hour", "n", "mae", "rmse", "mape", "me"], hourly)
    write_rows(out / "residual_scatter.csv",
               ["segment", "scenario", "timestamp", "actual_kwh", "predicted_kwh"],
               [(seg, sc, t, a, p) for seg, sc, s in tagged
                for t, a, p in zip(format_timestamps(s.ts), map(float, s.actual), map(float, s.predicted))])
    cells = scenario_comparison(models, series, cfg.mode)
    write_rows(out / "scenario_comparison.csv", HEADERS["scenarios"],
               [(c.segment, c.scenario, c.n, c.rmse, c.mae, c.mape, c.me) for c in cells])


def run_report(eval_dir: Path, out: Path) -> None:
    samples_path = _require(eval_dir / "samples.csv", "evaluation file samples.csv")
    comp_path = _require(eval_dir / "scenario_comparison.csv", "evaluation file scenario_comparison.csv")
    samples = {k: v for k, v in read_samples(samples_path).items() if len(v)}
    write_report(samples, read_comparison(comp_path), out)


def run_pipeline(cfg: PipelineConfig, out: Path, seed: int | None) -> None:
    """synth (unless input files are configured), clean, fit every scenario, evaluate, report."""
    if cfg.load and cfg.weather:
        load_path, weather_path = _require(cfg.load, "load file"), _require(cfg.weather, "weather file")
    else:
        paths = run_synth(cfg, out / "data", seed)
        load_path, weather_path = paths["load"], paths["weather"]
    series_path = run_clean(load_path, weather_path, out / "clean")
    series = HourlySeries.from_csv(series_path)
    fit_cfg = PipelineConfig(**{**cfg.__dict__, "scenario": "all"})
    models = run_fit(fit_cfg, series, out / "fit")
    run_evaluate(cfg, series, models, out / "eval")
    run_report(out / "eval", out / "report")


# -- argument handling --------------------------------------------------------------

def _global_flags(parser, default):
    parser.add_argument("--config", default=default,
                        help="TOML file with [synth], [selection] and [pipeline] sections")
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--seed", type=int, default=default, help="seed for synthetic data")
    parser.add_argument("-v", "--verbose", action="store_true",
                        default=False if default is None else default)


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; the copy on
    # each subcommand suppresses its default so it cannot mask the first
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)

    p = _Parser(prog="heatload", description="Hourly heat-load ARX modelling pipeline.")
    _global_flags(p, None)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")

    c = sub.add_parser("clean", parents=[common], help="ingest, flag outliers and impute")
    c.add_argument("--load")
    c.add_argument("--weather")

    f = sub.add_parser("fit", parents=[common], help="select and fit segment models")
    f.add_argument("--series", help="cleaned series CSV")
    f.add_argument("--scenario", choices=[s.value for s in Scenario] + ["all"])
    f.add_argument("--segment", action="append", choices=[s.slug for s in SEGMENTS])

    fc = sub.add_parser("forecast", parents=[common], help="recursive forecast from one model")
    fc.add_argument("--model", required=True)
    fc.add_argument("--series", help="hourly series CSV with load history and weather")
    fc.add_argument("--load", help="load CSV (alternative to --series)")
    fc.add_argument("--weather", help="weather CSV (alternative to --series)")
    fc.add_argument("--origin", required=True, help="first forecast hour, YYYY-MM-DDTHH:MM")
    fc.add_argument("--horizon", type=int)

    e = sub.add_parser("evaluate", parents=[common], help="score models on test days")
    e.add_argument("--series")
    e.add_argument("--models", required=True, help="directory of model JSON files")
    e.add_argument("--mode", choices=MODES)

    r = sub.add_parser("report", parents=[common], help="figure tables and SVG charts")
    r.add_argument("--eval", required=True, dest="eval_dir", help="evaluate output directory")

    sub.add_parser("pipeline", parents=[common], help="synth, clean, fit, evaluate and report")
    return p


def _dispatch(args) -> int:
    cfg = load_config(args.config)
    if getattr(args, "scenario", None):
        cfg.scenario = args.scenario
    if getattr(args, "segment", None):
        cfg.segments = tuple(args.segment)
    if getattr(args, "horizon", None) is not None:
        cfg.horizon = args.horizon
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    cfg.__post_init__()
    out = Path(args.out or ".")
    cmd = args.command

    if cmd == "synth":
        run_synth(cfg, out, args.seed)
        write_manifest(out, cmd, {"synth": dict(cfg.synth), "seed": args.seed})
    elif cmd == "clean":
        run_clean(_require(args.load or cfg.load, "load file"),
                  _require(args.weather or cfg.weather, "weather file"), out)
        write_manifest(out, cmd, {})
    elif cmd == "fit":
        series = HourlySeries.from_csv(_require(args.series or cfg.series, "series file"))
        run_fit(cfg, series, out)
        write_manifest(out, cmd, _settings(cfg))
    elif cmd == "forecast":
        model = FittedModel.from_json(_require(args.model, "model file").read_text(encoding="utf-8"))
        if args.series:
            series = HourlySeries.from_csv(_require(args.series, "series file"))
        else:
            series = load_series(_require(args.load, "load file"), _require(args.weather, "weather file"))
        req = ForecastRequest.from_series(model, series, parse_timestamp(args.origin), cfg.horizon)
        res = forecast_recursive(req)
        out.mkdir(parents=True, exist_ok=True)
        res.to_csv(out / "predictions.csv")
        write_manifest(out, cmd, {"origin": args.origin, "horizon": cfg.horizon})
    elif cmd == "evaluate":
        series = HourlySeries.from_csv(_require(args.series or cfg.series, "series file"))
        run_evaluate(cfg, series, read_models(Path(args.models)), out)
        write_manifest(out, cmd, _settings(cfg))
    elif cmd == "report":
        run_report(Path(args.eval_dir), out)
        write_manifest(out, cmd, {})
    elif cmd == "pipeline":
        run_pipeline(cfg, out, args.seed)
        write_manifest(out, cmd, _settings(cfg, synth=dict(cfg.synth), seed=args.seed))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return _dispatch(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"heatload: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"heatload: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HeatLoadError, OSError) as exc:
        print(f"heatload: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
