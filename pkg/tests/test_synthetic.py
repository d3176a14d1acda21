import numpy as np
import pytest

from conftest import WINTER_WORKDAY_DUMMIES, synthetic_series
from heatload.calendar import SEGMENTS, segment_mask
from heatload.errors import InputError
from heatload.features import LagSpec, Scenario, build_design_matrix
from heatload.ingest import load_series
from heatload.regression import fit_ols
from heatload.synthetic import GeneratorConfig, ProcessTruth, generate

CONSTANT = ProcessTruth(intercept=10.0, load_coefs=(), temp_coefs=(), irr_coefs=())


def test_constant_process():
    data = generate(GeneratorConfig(seed=1, start="2014-01-01", end="2014-02-01",
                                    noise_sd=0.0, truth=CONSTANT))
    assert len(data.load) == 31 * 24
    assert {r.load for r in data.load} == {10.0}


def test_same_seed_gives_identical_files(tmp_path):
    cfg = dict(seed=7, start="2014-01-01", end="2014-01-15", outlier_rate=0.01, gap_rate=0.01)
    a = generate(GeneratorConfig(**cfg)).write(tmp_path / "a")
    b = generate(GeneratorConfig(**cfg)).write(tmp_path / "b")
    for key in ("load", "weather", "truth"):
        assert a[key].read_bytes() == b[key].read_bytes()
    c = generate(GeneratorConfig(**{**cfg, "seed": 8})).write(tmp_path / "c")
    assert a["load"].read_bytes() != c["load"].read_bytes()


@pytest.mark.parametrize("coefs", [(0.6, 0.4), (1.0,), (-0.5, 0.3, -0.3)])
def test_unstable_autoregression_rejected(coefs):
    with pytest.raises(InputError, match="unstable"):
        ProcessTruth(load_coefs=coefs)


def test_config_validation():
    with pytest.raises(InputError):
        GeneratorConfig(noise_sd=-1.0)
    with pytest.raises(InputError):
        GeneratorConfig(start="2015-01-01", end="2014-01-01")
    with pytest.raises(InputError, match="unknown generator keys"):
        GeneratorConfig.from_mapping({"seed": 1, "colour": "red"})
    with pytest.raises(InputError, match="segment"):
        GeneratorConfig(segments={"summer-workday": {}})
    cfg = GeneratorConfig.from_mapping({"seed": 3, "intercept": 4.0, "start": "2014-01-01"})
    assert cfg.truth.intercept == 4.0 and cfg.seed == 3


def test_written_files_reload_to_same_series(tmp_path):
    data = generate(GeneratorConfig(seed=2, start="2014-01-01", end="2014-01-20", gap_rate=0.02))
    paths = data.write(tmp_path)
    series = load_series(paths["load"], paths["weather"])
    again, _ = synthetic_series(seed=2, start="2014-01-01", end="2014-01-20", gap_rate=0.02)
    assert np.array_equal(series.ts, again.ts)
    for col in ("load", "temperature", "irradiation"):
        assert np.array_equal(getattr(series, col), getattr(again, col), equal_nan=True)
    assert len(data.truth["load_gaps"]) > 0


def test_irradiation_zero_at_night():
    series, _ = synthetic_series(seed=4, start="2014-01-01", end="2014-01-08")
    hod = (series.ts - series.ts.astype("datetime64[D]")).astype(int)
    assert np.all(series.irradiation[(hod < 6) | (hod > 18)] == 0.0)
    assert series.irradiation.max() > 0


def test_exact_refit_at_zero_noise(winter_zero_noise):
    truth = ProcessTruth(dummies=WINTER_WORKDAY_DUMMIES)
    seg = SEGMENTS[0]
    dm = build_design_matrix(winter_zero_noise, seg, LagSpec(3, 1, 1), Scenario.PLUS_CALENDAR,
                             list(WINTER_WORKDAY_DUMMIES))
    model = fit_ols(dm.train())
    want = {"const": truth.intercept, "Q1": 0.5, "Q2": 0.2, "Q3": 0.1,
            "T0": -0.3, "T1": -0.2, "I0": -0.02, "I1": -0.01, **WINTER_WORKDAY_DUMMIES}
    assert {c.label for c in model.columns} == set(want)
    for label, v in want.items():
        assert model.coefficient(label) == pytest.approx(v, rel=1e-8)


def test_per_segment_truth():
    weekend = ProcessTruth(intercept=3.0, load_coefs=(), temp_coefs=(), irr_coefs=())
    series, _ = synthetic_series(seed=1, start="2014-01-01", end="2014-01-15", noise_sd=0.0,
                                 truth=CONSTANT, segments={"winter-weekend": weekend})
    we = segment_mask(series.ts, SEGMENTS[1])
    assert set(np.unique(series.load[we])) == {3.0}
    assert set(np.unique(series.load[~we])) == {10.0}


def test_spikes_are_recorded():
    data = generate(GeneratorConfig(seed=9, start="2013-12-01", end="2014-03-01", outlier_rate=0.01))
    assert len(data.truth["spikes"]) > 0
