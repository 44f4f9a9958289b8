"""Compare the compiled and pure-Python geodesic kernels on the family metric.

    python3 benchmarks/bench_kernels.py [--steps 2000] [--repeat 5]
"""
import argparse
import time
from fractions import Fraction

import numpy as np

from geodefect import kernels
from geodefect.counterexample import FamilyParams, build_family_metric
from geodefect.geodesic import integrate_geodesic


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    m = build_family_metric(FamilyParams(A=Fraction(1, 2)))
    x0 = (Fraction(0),) * 3
    v0 = (Fraction(1), Fraction(1, 3), Fraction(-1, 4))
    results = {}
    for name, mod in kernels.backends().items():
        t, curve = best_time(
            lambda: integrate_geodesic(m, x0, v0, Fraction(1, 2), args.steps, backend=mod),
            args.repeat,
        )
        results[name] = (t, curve.positions())
        print(f"{name:>8}: {t:.4f} s for {args.steps} RK4 steps")
    if len(results) == 2:
        (tc, xc), (tp, xp) = results["cython"], results["python"]
        print(f"speedup: {tp / tc:.1f}x, max position difference {np.max(np.abs(xc - xp)):.2e}")
    else:
        print(f"only the {next(iter(results))} backend is available")


if __name__ == "__main__":
    main()
