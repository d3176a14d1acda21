"""Student-t and F tail probabilities through the regularized incomplete beta."""
import math

import numpy as np

from . import kernels
from .errors import InputError


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)`` for ``0 <= x <= 1``."""
    if not (a > 0 and b > 0):
        raise InputError("betainc needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise InputError("betainc needs 0 <= x <= 1")
    return kernels.betainc(a, b, x, 1.0 - x)


def t_pvalue(t: float, df: float) -> float:
    """Two-sided tail ``P(|T| >= |t|)`` for a Student-t with ``df`` degrees of freedom."""
    if not df >= 1:
        raise InputError(f"degrees of freedom must be >= 1, got {df}")
    t = abs(float(t))
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    t2 = t * t
    denom = df + t2
    # x = df / (df + t^2) and its complement, both formed without cancellation
    return min(1.0, max(0.0, kernels.betainc(df / 2.0, 0.5, df / denom, t2 / denom)))


def t_pvalues(t, df) -> np.ndarray:
    return np.array([t_pvalue(v, df) for v in np.ravel(t)]).reshape(np.shape(t))


def f_pvalue(f: float, d1: float, d2: float) -> float:
    """Upper tail ``P(F >= f)`` of an F distribution with ``(d1, d2)`` degrees of freedom."""
    if not (d1 >= 1 and d2 >= 1):
        raise InputError(f"F degrees of freedom must be >= 1, got ({d1}, {d2})")
    f = float(f)
    if math.isnan(f):
        return math.nan
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    denom = d2 + d1 * f
    return min(1.0, max(0.0, kernels.betainc(d2 / 2.0, d1 / 2.0, d2 / denom, d1 * f / denom)))
