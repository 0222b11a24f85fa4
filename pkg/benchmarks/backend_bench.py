"""Timing comparison of the compiled inner-solve kernel vs the numpy fallback.

Runs the projected extragradient kernel on affine operators over the three
projection geometries at a few sizes, checks both backends agree to 1e-10,
and prints best-of-5 wall times with the speedup ratio.

Usage: python3 benchmarks/backend_bench.py [--sizes 20,100,400] [--repeats 5]
"""

import argparse
import time

import numpy as np

from urom._kernels import pure

try:
    from urom._kernels import _ext
except ImportError:
    _ext = None


def make_case(n, proj_kind, seed):
    rng = np.random.default_rng(seed)
    Q = rng.standard_normal((n, n))
    G = Q @ Q.T / n + 0.5 * np.eye(n)
    S = rng.standard_normal((n, n))
    G = G + 0.3 * (S - S.T)
    c = rng.standard_normal(n)
    xc = np.zeros(n)
    B = np.eye(n)
    Binv = np.eye(n)
    lo = -np.ones(n)
    hi = np.ones(n)
    center = np.zeros(n)
    radius = 1.0
    w = np.ones(n)
    y0 = np.zeros(n) if proj_kind != pure.PROJ_SIMPLEX else np.ones(n) / n
    L = float(np.linalg.norm(G, 2))
    gamma = 0.9 / L
    return (G, c, xc, B, Binv, proj_kind, lo, hi, center, radius, w,
            y0, gamma, 1e-10, 200000)


def time_kernel(impl, case, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = impl.extragradient_affine(*case)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    par = argparse.ArgumentParser()
    par.add_argument("--sizes", default="20,100,400")
    par.add_argument("--repeats", type=int, default=5)
    args = par.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _ext is None:
        print("compiled backend not importable; timing the fallback only")

    kinds = [("ball", pure.PROJ_BALL), ("box", pure.PROJ_BOX),
             ("simplex", pure.PROJ_SIMPLEX)]
    header = f"{'case':>16} {'iters':>7} {'pure ms':>10} {'compiled ms':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        for label, kind in kinds:
            case = make_case(n, kind, seed=n + kind)
            tp, (yp, rp, itp, okp) = time_kernel(pure, case, args.repeats)
            row = f"{label + '/n=' + str(n):>16} {itp:>7d} {1e3 * tp:>10.2f}"
            if _ext is not None:
                tc, (yc, rc, itc, okc) = time_kernel(_ext, case, args.repeats)
                drift = float(np.max(np.abs(np.asarray(yp) - np.asarray(yc))))
                agree = "" if drift <= 1e-10 else f"  DRIFT {drift:.2e}"
                row += f" {1e3 * tc:>12.2f} {tp / tc:>7.1f}x{agree}"
            print(row)


if __name__ == "__main__":
    main()
