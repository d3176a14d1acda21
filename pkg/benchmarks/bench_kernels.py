"""Time each hot kernel on its numba and numpy paths.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--json out.json]

Both variants are imported directly, so the HEATLOAD_DISABLE_NUMBA flag
does not matter here. Numba timings exclude the first (compiling) call.
"""
import argparse
import json
import time

import numpy as np

from heatload import kernels
from heatload._jit import NUMBA_AVAILABLE


def _cases(rng):
    X = rng.normal(size=(5000, 40))
    y = X @ rng.normal(size=40) + rng.normal(size=5000)
    tol = 5000 * kernels.EPS * np.sqrt((X * X).sum(axis=0)).max()
    ok = rng.random(200_000) > 0.01
    t2 = rng.uniform(0, 25, size=2000)
    horizon = 168
    arx = (np.full(horizon, 2.0), np.array([0.5, 0.2, 0.1]), np.array([-0.3, -0.2]),
           np.array([-0.02, -0.01]), np.array([50.0, 51.0, 52.0]),
           rng.normal(size=horizon + 1), rng.uniform(0, 400, size=horizon + 1))
    drive = rng.normal(size=100_000)
    rows = np.tile([0.5, 0.2, 0.1], (100_000, 1))
    return {
        "qr_lstsq 5000x40": (kernels.qr_lstsq_numba, kernels.qr_lstsq_numpy, (X, y, tol)),
        "run_lengths 200k": (kernels.run_lengths_numba, kernels.run_lengths_numpy, (ok,)),
        "betainc x2000": (
            lambda a: [kernels.betainc_numba(15.0, 0.5, 30.0 / (30.0 + v * v), v * v / (30.0 + v * v)) for v in a],
            lambda a: [kernels.betainc_numpy(15.0, 0.5, 30.0 / (30.0 + v * v), v * v / (30.0 + v * v)) for v in a],
            (t2,)),
        "arx_recursion h=168": (kernels.arx_recursion_numba, kernels.arx_recursion_numpy, arx),
        "simulate_ar 100k": (kernels.simulate_ar_numba, kernels.simulate_ar_numpy,
                             (drive, rows, np.zeros(3))),
    }


def _best(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write timings to this file")
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    results = {}
    print(f"{'kernel':24s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, (fast, slow, call_args) in _cases(rng).items():
        fast(*call_args)  # compile
        t_fast = _best(fast, call_args, args.repeat)
        t_slow = _best(slow, call_args, max(1, args.repeat // 2))
        results[name] = {"numba_s": t_fast, "numpy_s": t_slow}
        print(f"{name:24s} {1e3 * t_fast:10.3f} {1e3 * t_slow:10.3f} {t_slow / t_fast:8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=1)


if __name__ == "__main__":
    main()
