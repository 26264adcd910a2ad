#!/usr/bin/env python3
"""Compare the compiled numeric kernels against the pure-Python fallback.

The package selects the backend at import time, so the fallback numbers
are collected in a subprocess launched with DEMANDCAST_PURE=1.  Run:

    python benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

REPEATS = 5


def _time(fn, *args) -> float:
    best = float("inf")
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_suite() -> dict:
    from demandcast._kernels import (
        BACKEND,
        arma_forecast,
        arma_simulate,
        cd_lasso_gram,
        css_innovations,
    )

    rng = np.random.default_rng(0)

    # Seasonal ARMA polynomials of realistic size: (1,1)x(1,0)24.
    ar = np.zeros(26)
    ar[0], ar[1], ar[25] = 1.0, -0.7, -0.6
    ma = np.array([1.0, 0.3])
    w = rng.standard_normal(100_000)
    eps = rng.standard_normal(100_000)

    n, p = 20_000, 40
    X = rng.standard_normal((n, p))
    y = X[:, :5] @ rng.standard_normal(5) + rng.standard_normal(n)
    gram = X.T @ X
    xty = X.T @ y
    yty = float(y @ y)
    w0 = np.zeros(p)

    results = {
        "backend": BACKEND,
        "css_innovations_100k": _time(css_innovations, w, ar, ma),
        "arma_simulate_100k": _time(arma_simulate, eps, ar, ma),
        "arma_forecast_96k": _time(
            arma_forecast, w[:500], eps[:500], ar, ma, 96_432
        ),
        "cd_lasso_gram_40x40": _time(
            cd_lasso_gram, gram, xty, yty, n, 0.01, w0, 1000, 1e-9
        ),
    }
    return results


def main() -> int:
    if os.environ.get("DEMANDCAST_PURE") == "1":
        print(json.dumps(run_suite()))
        return 0

    compiled = run_suite()
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__)],
        env={**os.environ, "DEMANDCAST_PURE": "1"},
        capture_output=True,
        text=True,
        check=True,
    )
    pure = json.loads(proc.stdout.strip().splitlines()[-1])

    print(f"{'kernel':28s} {'compiled':>12s} {'python':>12s} {'speedup':>9s}")
    for key in compiled:
        if key == "backend":
            continue
        c, p = compiled[key], pure[key]
        print(f"{key:28s} {c * 1e3:10.2f}ms {p * 1e3:10.2f}ms {p / c:8.1f}x")
    if compiled["backend"] != "compiled":
        print(
            "note: compiled extension unavailable; both columns used the "
            "pure-Python backend"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
