import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatload.ingest import Quality
from heatload.preprocess import clean, detect_outliers_iqr, impute, mark_outliers
from heatload.synthetic import GeneratorConfig

from conftest import hours, make_series, synthetic_series


def test_single_bin_example():
    loads = list(range(1, 11)) + [100]
    s = make_series(hours("2019-01-01T00", 11), load=loads, temp=[1.0] * 11)
    rep = detect_outliers_iqr(s)
    (b,) = rep.bins
    assert (b.q1, b.q3, b.low_fence, b.high_fence) == (3.5, 8.5, -4.0, 16.0)
    assert rep.flagged.tolist() == [10]


def test_constant_bin_flags_nothing():
    s = make_series(hours("2019-01-01T00", 20), load=[7.0] * 20, temp=[0.5] * 20)
    assert detect_outliers_iqr(s).flagged.size == 0


def test_small_bin_flags_nothing():
    s = make_series(hours("2019-01-01T00", 5), load=[1, 1, 1, 1, 1000], temp=[0.5] * 5)
    assert detect_outliers_iqr(s).flagged.size == 0


def test_bins_anchored_at_multiples_of_width():
    s = make_series(hours("2019-01-01T00", 3), load=[1, 1, 1], temp=[-0.1, 0.0, 2.49])
    assert sorted((b.lower, b.upper) for b in detect_outliers_iqr(s).bins) == [(-2.5, 0.0), (0.0, 2.5)]


def test_rows_without_temperature_do_not_participate():
    loads = list(range(1, 11)) + [100]
    temps = [1.0] * 10 + [np.nan]
    rep = detect_outliers_iqr(make_series(hours("2019-01-01T00", 11), load=loads, temp=temps))
    assert rep.flagged.size == 0 and rep.n_load_rows == 11


def test_impute_single_gap():
    s = make_series(hours("2019-01-01T00", 3), temp=[10.0, np.nan, 12.0])
    out = impute(s)
    assert out.temperature[1] == 11.0
    assert out.temperature_quality[1] == Quality.IMPUTED


def test_impute_leaves_four_hour_gap():
    temps = [1.0, np.nan, np.nan, np.nan, np.nan, 6.0]
    out = impute(make_series(hours("2019-01-01T00", 6), temp=temps))
    assert np.all(np.isnan(out.temperature[1:5]))
    assert np.all(out.temperature_quality[1:5] == Quality.MISSING)


def test_impute_counts_absent_timestamps_as_gap():
    ts = hours("2019-01-01T00", 6)[[0, 5]]
    out = impute(make_series(ts, temp=[1.0, 6.0]))
    assert out.temperature.tolist() == [1.0, 6.0]


def test_outlier_load_never_imputed():
    loads = list(range(1, 11)) + [100]
    s = make_series(hours("2019-01-01T00", 11), load=loads, temp=[1.0] * 11)
    cleaned, rep = clean(s)
    assert cleaned.load_quality[10] == Quality.OUTLIER
    assert not cleaned.usable("load")[10]


values = st.lists(st.floats(0, 100, allow_nan=False), min_size=8, max_size=60)


@given(values, st.floats(-50, 50, allow_nan=False))
def test_shift_invariance(loads, c):
    n = len(loads)
    ts = hours("2019-01-01T00", n)
    a = detect_outliers_iqr(make_series(ts, load=loads, temp=[1.0] * n))
    b = detect_outliers_iqr(make_series(ts, load=np.array(loads) + c, temp=[1.0] * n))
    # the shift is exact only up to rounding, so compare away from the fences
    lo, hi = a.bins[0].low_fence, a.bins[0].high_fence
    far = np.abs(np.minimum(np.array(loads) - lo, hi - np.array(loads))) > 1e-6 * (1 + abs(c))
    fa, fb = set(a.flagged.tolist()), set(b.flagged.tolist())
    idx = set(np.nonzero(far)[0].tolist())
    assert fa & idx == fb & idx
    assert b.bins[0].q1 == pytest.approx(a.bins[0].q1 + c, abs=1e-9)


@given(values, st.lists(st.floats(-20, 20, allow_nan=False), min_size=60, max_size=60))
def test_flagged_iff_outside_fences(loads, temps):
    n = len(loads)
    s = make_series(hours("2019-01-01T00", n), load=loads, temp=temps[:n])
    rep = detect_outliers_iqr(s)
    flagged = set(rep.flagged.tolist())
    for b in rep.bins:
        members = [i for i in range(n) if b.lower <= temps[i] < b.upper]
        for i in members:
            outside = b.n >= 8 and (loads[i] < b.low_fence or loads[i] > b.high_fence)
            assert (i in flagged) == outside


@given(st.lists(st.one_of(st.none(), st.floats(-20, 20, allow_nan=False)), min_size=2, max_size=40))
def test_imputed_values_between_flanks(vals):
    temps = [np.nan if v is None else v for v in vals]
    s = make_series(hours("2019-01-01T00", len(temps)), temp=temps)
    out = impute(s)
    ok = np.isfinite(np.array(temps))
    good = np.nonzero(ok)[0]
    for i in np.nonzero(out.temperature_quality == Quality.IMPUTED)[0]:
        a, b = good[good < i].max(), good[good > i].min()
        lo, hi = sorted((temps[a], temps[b]))
        assert lo - 1e-12 <= out.temperature[i] <= hi + 1e-12
        assert b - a - 1 <= 3


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10_000))
def test_planted_spikes_all_flagged(seed):
    series, data = synthetic_series(seed=seed, start="2013-12-01", end="2014-06-01",
                                    outlier_rate=0.005, outlier_sd=6.0)
    rep = detect_outliers_iqr(series)
    spikes = np.searchsorted(series.ts, np.array(data.truth["spikes"], dtype="datetime64[h]"))
    assert set(spikes.tolist()) <= set(rep.flagged.tolist())


def test_mark_outliers_sets_flag():
    s = make_series(hours("2019-01-01T00", 3), load=[1, 2, 3], temp=[0, 0, 0])
    rep = detect_outliers_iqr(s)
    rep.flagged = np.array([1])
    assert mark_outliers(s, rep).load_quality.tolist() == [0, 4, 0]
