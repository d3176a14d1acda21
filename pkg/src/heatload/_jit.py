"""Numba switch.

Set ``HEATLOAD_DISABLE_NUMBA=1`` to run every kernel on its pure-numpy path.
When numba is not importable the numpy path is used regardless.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("HEATLOAD_DISABLE_NUMBA", "").strip().lower()

NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and _FLAG not in {"1", "true", "yes", "on"}


def njit(func):
    """Compile ``func`` in nopython mode, or return it unchanged without numba."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)


def pick(jitted, fallback):
    return jitted if NUMBA_ENABLED else fallback
