"""Hot numeric kernels.

Every kernel exists twice: a numba-compiled loop and a numpy (or plain
Python) fallback. The public names at the bottom of the module dispatch on
``heatload._jit.NUMBA_ENABLED``; the ``*_numba`` / ``*_numpy`` names stay
importable so both paths can be tested and benchmarked side by side.
"""
import math

import numpy as np

from ._jit import njit, pick

EPS = np.finfo(np.float64).eps


# --------------------------------------------------------------------------
# Householder QR with column pivoting, applied to a least-squares problem
# --------------------------------------------------------------------------

def _qr_lstsq_loops(A, y, tol):
    # Work on the transpose so that each design column is a contiguous row.
    m, n = A.shape
    W = np.ascontiguousarray(A.T).copy()
    qty = y.copy()
    perm = np.arange(n)
    v = np.empty(m)
    rank = 0
    for j in range(min(m, n)):
        best = j
        best_norm = -1.0
        for c in range(j, n):
            s = 0.0
            for i in range(j, m):
                s += W[c, i] * W[c, i]
            if s > best_norm:
                best_norm = s
                best = c
        norm = math.sqrt(best_norm)
        if norm <= tol or norm == 0.0:
            break
        if best != j:
            for i in range(m):
                tmp = W[j, i]
                W[j, i] = W[best, i]
                W[best, i] = tmp
            tp = perm[j]
            perm[j] = perm[best]
            perm[best] = tp
        x0 = W[j, j]
        alpha = -norm if x0 >= 0.0 else norm
        vnorm2 = 0.0
        for i in range(j, m):
            v[i] = W[j, i]
        v[j] = x0 - alpha
        for i in range(j, m):
            vnorm2 += v[i] * v[i]
        beta = 2.0 / vnorm2
        W[j, j] = alpha
        for i in range(j + 1, m):
            W[j, i] = 0.0
        for c in range(j + 1, n):
            s = 0.0
            for i in range(j, m):
                s += v[i] * W[c, i]
            s *= beta
            for i in range(j, m):
                W[c, i] -= s * v[i]
        s = 0.0
        for i in range(j, m):
            s += v[i] * qty[i]
        s *= beta
        for i in range(j, m):
            qty[i] -= s * v[i]
        rank += 1
    R = np.zeros((rank, rank))
    for c in range(rank):
        for i in range(c + 1):
            R[i, c] = W[c, i]
    return R, qty, perm, rank


def qr_lstsq_numpy(A, y, tol):
    """Pivoted Householder least squares, numpy-vectorized per elimination step.

    Parameters
    ----------
    A : (m, n) array
    y : (m,) array
    tol : float
        Columns whose remaining norm falls to ``tol`` or below are treated as
        linearly dependent and left out.

    Returns
    -------
    R : (rank, rank) upper-triangular factor of the retained columns
    qty : (m,) array, ``Q.T @ y``; entries past ``rank`` carry the residual
    perm : (n,) int array, column order after pivoting
    rank : int
    """
    A = np.asarray(A, dtype=np.float64)
    m, n = A.shape
    W = np.array(A, dtype=np.float64, order="F", copy=True)
    qty = np.array(y, dtype=np.float64, copy=True)
    perm = np.arange(n)
    rank = 0
    for j in range(min(m, n)):
        block = W[j:, j:]
        partial = np.einsum("ij,ij->j", block, block)
        c = j + int(np.argmax(partial))
        norm = math.sqrt(partial[c - j])
        if norm <= tol or norm == 0.0:
            break
        if c != j:
            W[:, [j, c]] = W[:, [c, j]]
            perm[[j, c]] = perm[[c, j]]
        x = W[j:, j]
        alpha = -norm if x[0] >= 0.0 else norm
        v = x.copy()
        v[0] -= alpha
        beta = 2.0 / (v @ v)
        if j + 1 < n:
            W[j:, j + 1:] -= np.outer(beta * v, v @ W[j:, j + 1:])
        W[j, j] = alpha
        W[j + 1:, j] = 0.0
        qty[j:] -= (beta * (v @ qty[j:])) * v
        rank += 1
    return np.triu(W[:rank, :rank]), qty, perm, rank


qr_lstsq_numba = njit(_qr_lstsq_loops)


# --------------------------------------------------------------------------
# Trailing run lengths of usable values
# --------------------------------------------------------------------------

def _run_lengths_loops(ok):
    out = np.zeros(ok.shape[0], dtype=np.int64)
    run = 0
    for i in range(ok.shape[0]):
        if ok[i]:
            run += 1
        else:
            run = 0
        out[i] = run
    return out


def run_lengths_numpy(ok):
    """Length of the run of True values ending at each position (inclusive)."""
    ok = np.asarray(ok, dtype=bool)
    idx = np.arange(ok.shape[0])
    last_bad = np.maximum.accumulate(np.where(ok, -1, idx))
    return (idx - last_bad).astype(np.int64)


run_lengths_numba = njit(_run_lengths_loops)


# --------------------------------------------------------------------------
# Regularized incomplete beta
# --------------------------------------------------------------------------

def _betacf(a, b, x):
    # Modified Lentz evaluation of the continued fraction for I_x(a, b).
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 100000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def _betainc_scalar(a, b, x, y):
    # x + y == 1 is assumed; y is passed separately to keep precision near x = 1.
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    if x < (a + 1.0) / (a + b + 2.0):
        log_front = a * math.log(x) + b * math.log(y) - lbeta
        return math.exp(log_front) * _betacf(a, b, x) / a
    log_front = b * math.log(y) + a * math.log(x) - lbeta
    return 1.0 - math.exp(log_front) * _betacf(b, a, y) / b


_betacf_numba = njit(_betacf)


def _betainc_scalar_jit(a, b, x, y):
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    if x < (a + 1.0) / (a + b + 2.0):
        log_front = a * math.log(x) + b * math.log(y) - lbeta
        return math.exp(log_front) * _betacf_numba(a, b, x) / a
    log_front = b * math.log(y) + a * math.log(x) - lbeta
    return 1.0 - math.exp(log_front) * _betacf_numba(b, a, y) / b


def betainc_numpy(a, b, x, y):
    """Regularized incomplete beta ``I_x(a, b)`` with ``y = 1 - x`` given exactly."""
    return _betainc_scalar(float(a), float(b), float(x), float(y))


betainc_numba = njit(_betainc_scalar_jit)


# --------------------------------------------------------------------------
# Recursive ARX evaluation
# --------------------------------------------------------------------------

def _arx_recursion(offset, load_coef, temp_coef, irr_coef, history, temp, irr):
    # offset[h]: intercept plus active dummy effects at step h
    # history: the len(load_coef) loads preceding step 0, oldest first
    # temp[h + len(temp_coef) - 1 - k] is the temperature at step h minus k hours
    horizon = offset.shape[0]
    na = load_coef.shape[0]
    nbt = temp_coef.shape[0]
    nci = irr_coef.shape[0]
    buf = np.empty(na + horizon)
    for i in range(na):
        buf[i] = history[i]
    out = np.empty(horizon)
    for h in range(horizon):
        acc = offset[h]
        for k in range(na):
            acc += load_coef[k] * buf[na + h - 1 - k]
        for k in range(nbt):
            acc += temp_coef[k] * temp[h + nbt - 1 - k]
        for k in range(nci):
            acc += irr_coef[k] * irr[h + nci - 1 - k]
        buf[na + h] = acc
        out[h] = acc
    return out


def _simulate_ar(drive, coef_rows, init):
    # x[t] = drive[t] + sum_k coef_rows[t, k] * x[t - 1 - k]; x[t] = init[t] for t < p
    n = drive.shape[0]
    p = coef_rows.shape[1]
    x = np.empty(n)
    for t in range(n):
        if t < p:
            x[t] = init[t]
            continue
        acc = drive[t]
        for k in range(p):
            acc += coef_rows[t, k] * x[t - 1 - k]
        x[t] = acc
    return x


arx_recursion_numpy = _arx_recursion
arx_recursion_numba = njit(_arx_recursion)
simulate_ar_numpy = _simulate_ar
simulate_ar_numba = njit(_simulate_ar)


# --------------------------------------------------------------------------
# Dispatch
# --------------------------------------------------------------------------

_qr = pick(qr_lstsq_numba, qr_lstsq_numpy)
_runs = pick(run_lengths_numba, run_lengths_numpy)
_betainc = pick(betainc_numba, betainc_numpy)
_arx = pick(arx_recursion_numba, arx_recursion_numpy)
_sim = pick(simulate_ar_numba, simulate_ar_numpy)


def qr_lstsq(A, y, tol):
    A = np.ascontiguousarray(A, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _qr(A, y, float(tol))


def run_lengths(ok):
    return _runs(np.ascontiguousarray(ok, dtype=np.bool_))


def betainc(a, b, x, y):
    return _betainc(float(a), float(b), float(x), float(y))


def arx_recursion(offset, load_coef, temp_coef, irr_coef, history, temp, irr):
    f = lambda v: np.ascontiguousarray(v, dtype=np.float64)  # noqa: E731
    return _arx(f(offset), f(load_coef), f(temp_coef), f(irr_coef), f(history), f(temp), f(irr))


def simulate_ar(drive, coef_rows, init):
    return _sim(
        np.ascontiguousarray(drive, dtype=np.float64),
        np.ascontiguousarray(coef_rows, dtype=np.float64),
        np.ascontiguousarray(init, dtype=np.float64),
    )
