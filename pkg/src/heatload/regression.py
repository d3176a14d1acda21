"""Ordinary least squares with classical inference statistics."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels
from .calendar import SegmentKey
from .errors import InsufficientDataError, NumericalError
from .features import Column, DesignMatrix, LagSpec, Scenario
from .stats import f_pvalue, t_pvalue

# Residual norms below this fraction of ||y|| are treated as an exact fit.
EXACT_FIT_RTOL = 1e-10


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass
class LstsqSolution:
    coef: np.ndarray       # zero for dropped columns
    xtx_inv_diag: np.ndarray  # nan for dropped columns
    kept: np.ndarray       # bool mask of columns retained by pivoting
    rss: float
    rank: int


def solve_lstsq(X, y, n_obs: int | None = None) -> LstsqSolution:
    """Least squares by pivoted Householder QR.

    ``n_obs`` sets the observation count used in the rank tolerance
    ``n * eps * max column norm``; it defaults to ``X.shape[0]`` and differs
    only when ``X`` is an already-compressed triangular factor.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, k = X.shape
    n_obs = m if n_obs is None else n_obs
    norms = np.sqrt(np.einsum("ij,ij->j", X, X))
    tol = n_obs * kernels.EPS * (norms.max() if k else 0.0)
    R, qty, perm, rank = kernels.qr_lstsq(X, y, tol)
    coef = np.zeros(k)
    diag = np.full(k, np.nan)
    kept = np.zeros(k, dtype=bool)
    if rank:
        beta = solve_triangular(R, qty[:rank])
        rinv = solve_triangular(R, np.eye(rank))
        coef[perm[:rank]] = beta
        diag[perm[:rank]] = np.einsum("ij,ij->i", rinv, rinv)
        kept[perm[:rank]] = True
    tail = qty[rank:]
    rss = float(tail @ tail)
    if not math.isfinite(rss) or not np.all(np.isfinite(coef)):
        raise NumericalError("least-squares solve produced non-finite values")
    if rss <= (EXACT_FIT_RTOL ** 2) * float(y @ y):
        rss = 0.0
    return LstsqSolution(coef, diag, kept, rss, int(rank))


def information_criteria(rss: float, n: int, k: int) -> tuple[float, float]:
    """Gaussian-likelihood AIC and BIC, ``n ln(RSS/n) + 2k`` and ``n ln(RSS/n) + k ln n``.

    An exact fit (RSS = 0) has no finite criterion; both are returned as
    ``-inf`` so that callers rank it best.
    """
    if rss < 0:
        raise ValueError("RSS must be non-negative")
    if rss == 0.0:
        return -math.inf, -math.inf
    base = n * math.log(rss / n)
    return base + 2 * k, base + k * math.log(n)


def coefficient_inference(coef, xtx_inv_diag, rss, n, k):
    """Standard errors, t statistics and two-sided p-values."""
    dof = n - k
    sigma2 = rss / dof
    se = np.sqrt(sigma2 * xtx_inv_diag)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, coef / se, np.copysign(np.inf, coef))
    t = np.where((se == 0) & (coef == 0), 0.0, t)
    p = np.array([t_pvalue(v, dof) if np.isfinite(se_i) else math.nan
                  for v, se_i in zip(t, se)])
    return sigma2, se, t, p


@dataclass(frozen=True, eq=False)
class FittedModel:
    """An immutable OLS fit with its provenance and goodness-of-fit statistics."""

    columns: tuple
    coef: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    n: int
    k: int
    rss: float
    sigma2: float
    r2: float
    adj_r2: float
    f: float
    prob_f: float
    aic: float
    bic: float
    residuals: np.ndarray
    segment: SegmentKey | None = None
    scenario: Scenario | None = None
    spec: LagSpec | None = None
    dropped: tuple = field(default_factory=tuple)

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.columns]

    @property
    def dummies(self) -> tuple:
        return tuple(c.hour for c in self.columns if c.kind == "dummy")

    @property
    def name(self) -> str:
        from .selection import model_name
        return model_name(self)

    def coefficient(self, label: str) -> float:
        return float(self.coef[self.labels.index(label)]) if label in self.labels else 0.0

    def predict(self, dm: DesignMatrix) -> np.ndarray:
        """Fitted values on a design matrix whose columns include this model's."""
        pos = {c: i for i, c in enumerate(dm.columns)}
        return dm.X[:, [pos[c] for c in self.columns]] @ self.coef

    def summary(self) -> dict:
        return {
            "segment": self.segment.slug if self.segment else None,
            "scenario": self.scenario.value if self.scenario else None,
            "name": self.name,
            "n": self.n, "k": self.k,
            "r2": self.r2, "adj_r2": self.adj_r2,
            "f": self.f, "prob_f": self.prob_f,
            "aic": self.aic, "bic": self.bic,
        }

    def to_dict(self) -> dict:
        return {
            "segment": self.segment.slug if self.segment else None,
            "scenario": self.scenario.value if self.scenario else None,
            "spec": None if self.spec is None else
            {"na": self.spec.na, "nb": self.spec.nb, "nc": self.spec.nc},
            "name": self.name,
            "columns": self.labels,
            "dropped": [c.label for c in self.dropped],
            "coef": [float(v) for v in self.coef],
            "se": [float(v) for v in self.se],
            "t": [float(v) for v in self.t],
            "p": [float(v) for v in self.p],
            "n": self.n, "k": self.k,
            "rss": self.rss, "sigma2": self.sigma2,
            "r2": self.r2, "adj_r2": self.adj_r2,
            "f": self.f, "prob_f": self.prob_f,
            "aic": self.aic, "bic": self.bic,
            "residuals": [float(v) for v in self.residuals],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FittedModel":
        spec = d.get("spec")
        return cls(
            columns=tuple(Column.parse(c) for c in d["columns"]),
            coef=np.array(d["coef"], dtype=float),
            se=np.array(d["se"], dtype=float),
            t=np.array(d["t"], dtype=float),
            p=np.array(d["p"], dtype=float),
            n=int(d["n"]), k=int(d["k"]),
            rss=float(d["rss"]), sigma2=float(d["sigma2"]),
            r2=float(d["r2"]), adj_r2=float(d["adj_r2"]),
            f=float(d["f"]), prob_f=float(d["prob_f"]),
            aic=float(d["aic"]), bic=float(d["bic"]),
            residuals=np.array(d.get("residuals", []), dtype=float),
            segment=SegmentKey.parse(d["segment"]) if d.get("segment") else None,
            scenario=Scenario(d["scenario"]) if d.get("scenario") else None,
            spec=LagSpec(**spec) if spec else None,
            dropped=tuple(Column.parse(c) for c in d.get("dropped", [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "FittedModel":
        return cls.from_dict(json.loads(text))


def fit_ols(dm: DesignMatrix) -> FittedModel:
    """Fit ``y ~ X`` and compute the classical summary statistics.

    Columns that pivoting finds linearly dependent are removed, listed in
    ``FittedModel.dropped`` and reported with a ``RankDeficiencyWarning``.
    """
    n, k_all = dm.X.shape
    if n <= k_all:
        raise InsufficientDataError(f"{n} rows cannot support {k_all} parameters")
    sol = solve_lstsq(dm.X, dm.y)
    cols = list(dm.columns)
    dropped = tuple(c for c, keep in zip(cols, sol.kept) if not keep)
    if dropped:
        warnings.warn("dropped collinear columns: " + ", ".join(c.label for c in dropped),
                      RankDeficiencyWarning, stacklevel=2)
    keep = sol.kept
    X = dm.X[:, keep]
    coef = sol.coef[keep]
    k = int(keep.sum())
    sigma2, se, t, p = coefficient_inference(coef, sol.xtx_inv_diag[keep], sol.rss, n, k)
    residuals = dm.y - X @ coef
    rss = sol.rss
    tss = float(np.sum((dm.y - dm.y.mean()) ** 2))
    if tss > 0:
        r2 = 1.0 - rss / tss
    else:
        r2 = 1.0
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - k)
    if k > 1:
        f = math.inf if r2 >= 1.0 else (r2 / (k - 1)) / ((1.0 - r2) / (n - k))
        prob_f = f_pvalue(f, k - 1, n - k)
    else:
        f, prob_f = math.nan, math.nan
    aic, bic = information_criteria(rss, n, k)
    return FittedModel(
        columns=tuple(c for c, keep_c in zip(cols, keep) if keep_c),
        coef=coef, se=se, t=t, p=p, n=n, k=k, rss=rss, sigma2=sigma2,
        r2=r2, adj_r2=adj_r2, f=f, prob_f=prob_f, aic=aic, bic=bic,
        residuals=residuals, segment=dm.segment, scenario=dm.scenario, spec=dm.spec,
        dropped=dropped,
    )
