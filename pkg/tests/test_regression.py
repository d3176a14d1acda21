import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from heatload.errors import InputError, InsufficientDataError
from heatload.features import Column, DesignMatrix
from heatload.regression import (
    FittedModel, RankDeficiencyWarning, fit_ols, information_criteria, solve_lstsq,
)
from heatload.stats import betainc, f_pvalue, t_pvalue

# frozen from scipy.integrate.quad of the t density, |t| = 2.228, df = 10
T_2228_DF10 = 0.050011771817111375


def design(X, y):
    X = np.asarray(X, dtype=float)
    cols = [Column("const")] + [Column("load", j) for j in range(1, X.shape[1])]
    return DesignMatrix(X, np.asarray(y, dtype=float), np.arange(len(y)).astype("datetime64[h]"), cols)


def with_const(x):
    x = np.asarray(x, dtype=float)
    x = x.reshape(len(x), -1)
    return np.column_stack([np.ones(len(x)), x])


def test_exact_line():
    x = np.arange(5.0)
    m = fit_ols(design(with_const(x), 1 + 2 * x))
    assert m.coef == pytest.approx([1, 2], abs=1e-12)
    assert m.r2 == 1.0 and m.rss == 0.0
    assert np.allclose(m.residuals, 0, atol=1e-12)
    assert m.aic == -math.inf and m.bic == -math.inf


def test_constant_target():
    x = np.array([0.0, 1, 5, 2, 7])
    m = fit_ols(design(with_const(x), np.full(5, 5.0)))
    assert m.coef == pytest.approx([5, 0], abs=1e-12)


def test_random_system_matches_normal_equations():
    rng = np.random.default_rng(1)
    X = with_const(rng.normal(size=(50, 3)))
    y = rng.normal(size=50)
    oracle = np.linalg.solve(X.T @ X, X.T @ y)
    m = fit_ols(design(X, y))
    assert np.allclose(m.coef, oracle, rtol=1e-8, atol=0)


def test_inference_matches_classical_formulas():
    rng = np.random.default_rng(2)
    X = with_const(rng.normal(size=(80, 3)))
    y = X @ [1.0, 0.5, 0.0, -2.0] + rng.normal(size=80)
    m = fit_ols(design(X, y))
    n, k = 80, 4
    resid = y - X @ m.coef
    sigma2 = resid @ resid / (n - k)
    se = np.sqrt(sigma2 * np.diag(np.linalg.inv(X.T @ X)))
    assert np.allclose(m.se, se, rtol=1e-10)
    assert np.allclose(m.t, m.coef / se, rtol=1e-10)
    tss = ((y - y.mean()) ** 2).sum()
    r2 = 1 - resid @ resid / tss
    assert m.r2 == pytest.approx(r2, rel=1e-12)
    assert m.adj_r2 == pytest.approx(1 - (1 - r2) * (n - 1) / (n - k), rel=1e-12)
    f = (r2 / (k - 1)) / ((1 - r2) / (n - k))
    assert m.f == pytest.approx(f, rel=1e-10)
    assert m.prob_f == pytest.approx(special.fdtrc(k - 1, n - k, f), rel=1e-8, abs=1e-300)
    assert m.p == pytest.approx([special.stdtr(n - k, -abs(t)) * 2 for t in m.t], rel=1e-8)
    assert (m.aic, m.bic) == information_criteria(m.rss, n, k)


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        fit_ols(design(with_const([1.0, 2.0]), [1.0, 2.0]))


def test_collinear_column_dropped_with_warning():
    rng = np.random.default_rng(3)
    x = rng.normal(size=30)
    X = np.column_stack([np.ones(30), x, 2 * x, rng.normal(size=30)])
    y = 1 + x + rng.normal(size=30)
    with pytest.warns(RankDeficiencyWarning):
        m = fit_ols(design(X, y))
    assert len(m.dropped) == 1 and m.k == 3
    assert m.dropped[0].label in ("Q1", "Q2")


def test_zero_column_dropped():
    rng = np.random.default_rng(4)
    X = np.column_stack([np.ones(20), rng.normal(size=20), np.zeros(20)])
    with pytest.warns(RankDeficiencyWarning):
        m = fit_ols(design(X, rng.normal(size=20)))
    assert [c.label for c in m.dropped] == ["Q2"]


def test_information_criteria_examples():
    aic, bic = information_criteria(100.0, 100, 2)
    assert aic == pytest.approx(4.0, abs=1e-12)
    assert bic == pytest.approx(9.210340371976184, abs=1e-12)
    assert information_criteria(50.0, 200, 3)[0] == pytest.approx(-271.25887222397813, abs=1e-9)
    a1, b1 = information_criteria(10.0, 50, 2)
    a2, b2 = information_criteria(10.0, 50, 4)
    assert a2 > a1 and b2 > b1
    assert information_criteria(0.0, 50, 2) == (-math.inf, -math.inf)


def test_t_pvalue_examples():
    assert t_pvalue(0.0, 7) == 1.0
    assert t_pvalue(2.228, 10) == pytest.approx(T_2228_DF10, abs=1e-9)
    assert abs(t_pvalue(2.228, 10) - 0.05) < 5e-4
    assert t_pvalue(100.0, 30) < 1e-12
    with pytest.raises(InputError):
        t_pvalue(1.0, 0)


def _t_density(x, df):
    return math.exp(special.gammaln((df + 1) / 2) - special.gammaln(df / 2)) / math.sqrt(df * math.pi) \
        * (1 + x * x / df) ** (-(df + 1) / 2)


@pytest.mark.parametrize("df", [1, 3, 10, 57])
@pytest.mark.parametrize("t", [0.1, 1.0, 2.5, 6.0])
def test_t_pvalue_against_quadrature(t, df):
    tail, _ = integrate.quad(_t_density, t, np.inf, args=(df,), epsabs=1e-14, epsrel=1e-12)
    assert t_pvalue(t, df) == pytest.approx(2 * tail, abs=1e-8)


def test_f_pvalue_edges():
    assert f_pvalue(0.0, 3, 10) == 1.0
    assert f_pvalue(math.inf, 3, 10) == 0.0
    assert f_pvalue(2.0, 3, 10) == pytest.approx(special.fdtrc(3, 10, 2.0), rel=1e-10)


@given(st.floats(0.05, 200), st.floats(0.05, 200), st.floats(0, 1))
def test_betainc_matches_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-10)


@given(st.integers(1, 500), st.floats(0, 30), st.floats(0, 30))
def test_t_pvalue_monotone_in_abs_t(df, t1, t2):
    lo, hi = sorted((t1, t2))
    assert t_pvalue(hi, df) <= t_pvalue(lo, df) + 1e-15
    assert t_pvalue(-hi, df) == t_pvalue(hi, df)


@st.composite
def systems(draw):
    n = draw(st.integers(10, 120))
    k = draw(st.integers(1, min(8, n - 2)))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    X = with_const(rng.normal(size=(n, k)))
    y = X @ rng.normal(size=k + 1) + rng.normal(size=n)
    return X, y


@settings(max_examples=60, deadline=None)
@given(systems())
def test_residuals_orthogonal_to_columns(sys_):
    X, y = sys_
    m = fit_ols(design(X, y))
    scale = np.abs(X).sum(axis=0) * np.abs(y).max()
    assert np.all(np.abs(X.T @ m.residuals) <= 1e-6 * scale)
    assert abs(m.residuals.sum()) <= 1e-8 * np.abs(y).sum()


@settings(max_examples=60, deadline=None)
@given(systems(), st.floats(1e-3, 1e3))
def test_scale_equivariance(sys_, s):
    X, y = sys_
    a, b = fit_ols(design(X, y)), fit_ols(design(X, s * y))
    assert np.allclose(b.coef, s * a.coef, rtol=1e-10, atol=1e-12 * s * np.abs(a.coef).max())
    assert np.allclose(b.se, s * a.se, rtol=1e-10)
    assert np.allclose(b.t, a.t, rtol=1e-8, atol=1e-8)
    assert b.r2 == pytest.approx(a.r2, rel=1e-10, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(systems())
def test_invariants(sys_):
    X, y = sys_
    m = fit_ols(design(X, y))
    assert len(m.coef) == len(m.se) == len(m.t) == len(m.p) == m.k
    assert 0.0 <= m.r2 <= 1.0 + 1e-12
    assert m.adj_r2 <= m.r2 + 1e-15
    assert np.all((m.p >= 0) & (m.p <= 1))


def test_json_round_trip_is_exact():
    rng = np.random.default_rng(5)
    X = with_const(rng.normal(size=(40, 2)))
    m = fit_ols(design(X, X @ [1.0, 2.0, 3.0] + rng.normal(size=40)))
    r = FittedModel.from_json(m.to_json())
    for name in ("coef", "se", "t", "p", "residuals"):
        assert np.array_equal(getattr(r, name), getattr(m, name))
    for name in ("n", "k", "rss", "sigma2", "r2", "adj_r2", "f", "prob_f", "aic", "bic"):
        assert getattr(r, name) == getattr(m, name)
    assert r.labels == m.labels
    assert json.loads(r.to_json()) == json.loads(m.to_json())


def test_solve_lstsq_rank_tolerance_uses_n_obs():
    X = np.array([[1.0, 1.0], [0.0, 1e-20]])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sol = solve_lstsq(X, np.array([1.0, 1.0]))
    assert sol.rank == 1
