"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--sizes 500,1000,2000] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from gaugekit import _core_py

try:
    from gaugekit import _core
except ImportError:  # extension not built
    _core = None


def _points(rng, count, dim, shrink=0.9):
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return shrink * rng.random(count)[:, None] ** (1.0 / dim) * g


def cases(n, dim, rng):
    xs = _points(rng, n, dim)
    ys = _points(rng, n, dim)
    zs = _points(rng, n, dim, 1.0)
    zs /= np.linalg.norm(zs, axis=1)[:, None]
    rho = np.full(n, 2.0 * n ** (-1.0 / dim))
    coef = rng.random(n)
    return {
        "green_block": lambda m: m.green_block(xs, ys, dim),
        "green_apply": lambda m: m.green_apply(xs, ys, coef, dim),
        "smoothed_block": lambda m: m.smoothed_block(xs, rho, dim),
        "smoothed_apply": lambda m: m.smoothed_apply(xs, rho, coef, dim),
        "poisson_block": lambda m: m.poisson_block(xs, zs, dim),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="500,1000,2000")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<16}{'N':>7}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>9}{'max rel diff':>14}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, fn in cases(n, args.dim, rng).items():
            t_py = min(timeit.repeat(lambda: fn(_core_py), number=1, repeat=args.repeat))
            if _core is None:
                print(f"{name:<16}{n:>7}{t_py:>12.4f}{'n/a':>12}")
                continue
            t_c = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat))
            a, b = fn(_core_py), fn(_core)
            fin = np.isfinite(a)
            diff = float(np.max(np.abs(a[fin] - b[fin]) / np.maximum(np.abs(a[fin]), 1e-300))) if fin.any() else 0.0
            print(f"{name:<16}{n:>7}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>9.2f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
