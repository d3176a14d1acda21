import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatload.calendar import SEGMENTS, DayType, HourOfWeek, hour_of_week_index, parse_timestamp
from heatload.errors import EmptySegmentError, InputError
from heatload.features import (
    Column, LagSpec, Scenario, build_design_matrix, calendar_dummies, lag_columns,
)
from heatload.ingest import Quality

from conftest import hours, make_series

WW = SEGMENTS[0]


def winter_week(n=24 * 14, seed=0):
    rng = np.random.default_rng(seed)
    ts = hours("2019-01-07T00", n)  # a Monday
    return make_series(ts, load=rng.normal(50, 5, n), temp=rng.normal(-5, 3, n),
                       irr=rng.uniform(0, 300, n))


def test_calendar_dummies_workday():
    v = calendar_dummies(parse_timestamp("2019-03-04T08:00"), DayType.WORKDAY)
    assert v.shape == (120,) and v.sum() == 1 and v[8] == 1


def test_calendar_dummies_weekend():
    v = calendar_dummies(parse_timestamp("2019-03-10T05:00"), DayType.WEEKEND)
    assert v.shape == (48,) and v.sum() == 1
    assert v[HourOfWeek.from_label("SUN_5h").index - 120] == 1


def test_calendar_dummies_daytype_mismatch():
    with pytest.raises(InputError):
        calendar_dummies(parse_timestamp("2019-03-10T05:00"), DayType.WORKDAY)


def test_q3_t1_i1_columns():
    dm = build_design_matrix(winter_week(), WW, LagSpec(3, 1, 1), Scenario.PLUS_IRRADIATION)
    assert dm.labels == ["const", "Q1", "Q2", "Q3", "T0", "T1", "I0", "I1"]
    assert dm.k == 8


def test_column_count_rule():
    spec = LagSpec(2, 3, 4)
    dm = build_design_matrix(winter_week(), WW, spec, Scenario.PLUS_CALENDAR, ["MON_8h", "TUE_1h"])
    assert dm.k == 1 + 2 + (3 + 1) + (4 + 1) + 2


def test_missing_load_lag_excludes_row():
    s = winter_week()
    s.load[100] = np.nan
    s.load_quality[100] = Quality.MISSING
    dm = build_design_matrix(s, WW, LagSpec(3), Scenario.LOAD_ONLY)
    assert s.ts[102] not in set(dm.ts.tolist())
    assert s.ts[103] not in set(dm.ts.tolist())
    assert s.ts[104] in set(dm.ts.tolist())


def test_outlier_load_breaks_lag_window():
    s = winter_week()
    s.load_quality[100] = Quality.OUTLIER
    dm = build_design_matrix(s, WW, LagSpec(1), Scenario.LOAD_ONLY)
    got = set(dm.ts.tolist())
    assert s.ts[100] not in got and s.ts[101] not in got and s.ts[102] in got


def test_empty_calendar_equals_irradiation():
    s = winter_week()
    a = build_design_matrix(s, WW, LagSpec(2, 1, 1), Scenario.PLUS_IRRADIATION)
    b = build_design_matrix(s, WW, LagSpec(2, 1, 1), Scenario.PLUS_CALENDAR, [])
    assert a.labels == b.labels and np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)


def test_lag_values_match_series():
    s = winter_week()
    dm = build_design_matrix(s, WW, LagSpec(2, 2, 1), Scenario.PLUS_IRRADIATION)
    pos = np.searchsorted(s.ts, dm.ts)
    assert np.array_equal(dm.X[:, dm.labels.index("Q2")], s.load[pos - 2])
    assert np.array_equal(dm.X[:, dm.labels.index("T0")], s.temperature[pos])
    assert np.array_equal(dm.X[:, dm.labels.index("T2")], s.temperature[pos - 2])
    assert np.array_equal(dm.X[:, dm.labels.index("I1")], s.irradiation[pos - 1])
    assert np.array_equal(dm.y, s.load[pos])


def test_monday_rows_use_sunday_lags():
    s = winter_week()
    dm = build_design_matrix(s, WW, LagSpec(1), Scenario.LOAD_ONLY)
    monday_8 = s.ts[24 * 7]  # second Monday 00:00
    assert monday_8 in set(dm.ts.tolist())


def test_empty_segment_causes():
    s = winter_week()
    with pytest.raises(EmptySegmentError) as err:
        build_design_matrix(s, SEGMENTS[2], LagSpec(1), Scenario.LOAD_ONLY)
    assert err.value.cause == "segment"
    s.load[:] = np.nan
    s.load_quality[:] = Quality.MISSING
    with pytest.raises(EmptySegmentError) as err:
        build_design_matrix(s, WW, LagSpec(1), Scenario.LOAD_ONLY)
    assert err.value.cause == "load"
    s = winter_week(n=30)
    s.load_quality[::2] = Quality.OUTLIER
    with pytest.raises(EmptySegmentError) as err:
        build_design_matrix(s, WW, LagSpec(1), Scenario.LOAD_ONLY)
    assert err.value.cause == "gaps"


def test_ineligible_dummy_rejected():
    with pytest.raises(InputError):
        build_design_matrix(winter_week(), WW, LagSpec(1), Scenario.PLUS_CALENDAR, ["SAT_2h"])


def test_lagspec_bounds():
    for bad in ((0, 0, 0), (13, 0, 0), (1, 25, 0), (1, 0, -1)):
        with pytest.raises(InputError):
            LagSpec(*bad)


def test_column_labels_round_trip():
    for c in lag_columns(LagSpec(12, 24, 24), Scenario.PLUS_IRRADIATION) + [Column("dummy", 8)]:
        assert Column.parse(c.label) == c


def test_design_matrix_csv(tmp_path):
    dm = build_design_matrix(winter_week(), WW, LagSpec(1, 0, 0), Scenario.PLUS_IRRADIATION)
    dm.to_csv(tmp_path / "dm.csv")
    lines = (tmp_path / "dm.csv").read_text().splitlines()
    assert lines[0] == "timestamp,y,const,Q1,T0,I0"
    assert len(lines) == dm.n + 1


specs = st.builds(LagSpec, st.integers(1, 6), st.integers(0, 6), st.integers(0, 6))


@settings(max_examples=40, deadline=None)
@given(specs, st.integers(0, 50))
def test_nested_scenarios_share_rows(spec, seed):
    s = winter_week(seed=seed)
    for i in np.random.default_rng(seed).integers(0, len(s), 5):
        s.load_quality[i] = Quality.MISSING
    top = build_design_matrix(s, WW, spec, Scenario.PLUS_IRRADIATION)
    lower = build_design_matrix(s, WW, spec, Scenario.PLUS_TEMPERATURE)
    assert lower.labels == top.labels[:lower.k]


@settings(max_examples=40, deadline=None)
@given(specs, specs, st.integers(0, 50))
def test_rows_shrink_with_larger_orders(a, b, seed):
    s = winter_week(seed=seed)
    for i in np.random.default_rng(seed).integers(0, len(s), 8):
        s.temperature_quality[i] = Quality.MISSING
    big = LagSpec(max(a.na, b.na), max(a.nb, b.nb), max(a.nc, b.nc))
    n_a = build_design_matrix(s, WW, a, Scenario.PLUS_IRRADIATION).n
    n_big = build_design_matrix(s, WW, big, Scenario.PLUS_IRRADIATION).n
    assert n_big <= n_a


@settings(max_examples=30, deadline=None)
@given(st.sets(st.integers(0, 119), max_size=10))
def test_dummy_columns_one_hot(idx):
    hows = [HourOfWeek(i) for i in sorted(idx)]
    dm = build_design_matrix(winter_week(), WW, LagSpec(1), Scenario.PLUS_CALENDAR, hows)
    block = dm.X[:, dm.k - len(hows):]
    row_sum = block.sum(axis=1)
    assert set(np.unique(row_sum)).issubset({0.0, 1.0})
    active = np.isin(hour_of_week_index(dm.ts), sorted(idx))
    assert np.array_equal(row_sum == 1, active)
