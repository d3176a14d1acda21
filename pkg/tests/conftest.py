import numpy as np
import pytest

from heatload.ingest import HourlySeries, Quality, align, resample_weather
from heatload.preprocess import clean
from heatload.synthetic import GeneratorConfig, ProcessTruth, generate

WINTER_WORKDAY_DUMMIES = {"TUE_1h": 4.0, "WED_3h": 4.0, "WED_7h": 5.0, "MON_8h": 5.0}


def make_series(ts, load=None, temp=None, irr=None):
    """Hourly series with every present value flagged as observed."""
    ts = np.asarray(ts, dtype="datetime64[h]")
    n = len(ts)

    def col(v):
        return np.full(n, np.nan) if v is None else np.asarray(v, dtype=float)

    cols = [col(load), col(temp), col(irr)]
    flags = [np.where(np.isfinite(c), Quality.OBSERVED, Quality.MISSING).astype(np.int8) for c in cols]
    return HourlySeries(ts, *cols, *flags)


def hours(start, n):
    return np.datetime64(start, "h") + np.arange(n).astype("timedelta64[h]")


def synthetic_series(**kw):
    data = generate(GeneratorConfig(**kw))
    return align(data.load, resample_weather(data.weather)), data


@pytest.fixture(scope="session")
def winter_zero_noise():
    """One zero-noise winter of the winter-workday truth, cleaned."""
    series, data = synthetic_series(
        seed=11, start="2013-12-01", end="2014-03-01", noise_sd=0.0,
        truth=ProcessTruth(dummies=WINTER_WORKDAY_DUMMIES))
    cleaned, _ = clean(series)
    return cleaned


@pytest.fixture(scope="session")
def year_noisy():
    """A year of noisy data covering all four segments, cleaned."""
    series, data = synthetic_series(
        seed=5, start="2013-12-01", end="2014-12-01", noise_sd=1.0,
        truth=ProcessTruth(dummies=WINTER_WORKDAY_DUMMIES))
    cleaned, _ = clean(series)
    return cleaned


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
