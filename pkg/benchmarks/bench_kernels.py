"""Time the compiled cone kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--cones 2000] [--dim 3] [--orthant 5000] [--repeat 200]

Both backends are checked for agreement on the same random interior
points before timing.
"""
from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from ucgna.conic import kernels_py

try:
    from ucgna.conic import _kernels
except ImportError:
    _kernels = None


def interior_point(rng, l, q_dims):
    parts = [rng.uniform(0.5, 2.0, l)]
    for d in q_dims:
        tail = rng.normal(size=d - 1)
        head = np.linalg.norm(tail) + rng.uniform(0.5, 2.0)
        parts.append(np.concatenate(([head], tail)))
    return np.concatenate(parts)


def layout(l, ncones, dim):
    q_dims = np.full(ncones, dim, dtype=np.int64)
    q_starts = (l + dim * np.arange(ncones)).astype(np.int64)
    return q_starts, q_dims


def cases(K, s, z, d, l, q_starts, q_dims):
    args = (l, q_starts, q_dims)
    lp_w, wbar, eta, lam = K.nt_scaling(s, z, *args)
    return {
        "nt_scaling": lambda: K.nt_scaling(s, z, *args),
        "scale": lambda: K.scale(d, lp_w, wbar, eta, *args, False),
        "jordan_prod": lambda: K.jordan_prod(s, z, *args),
        "jordan_div": lambda: K.jordan_div(lam, d, *args),
        "max_step": lambda: K.max_step(s, d, *args),
        "min_eig": lambda: K.min_eig(s, *args),
        "w2_blocks": lambda: K.w2_blocks(lp_w, wbar, eta, *args),
    }


def check(a, b):
    # kernels return an array, a scalar or a tuple of arrays
    if isinstance(a, tuple):
        for x, y in zip(a, b):
            check(x, y)
        return
    np.testing.assert_allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-9, atol=1e-12)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cones", type=int, default=2000)
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--orthant", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)

    rng = np.random.default_rng(a.seed)
    q_starts, q_dims = layout(a.orthant, a.cones, a.dim)
    s = interior_point(rng, a.orthant, q_dims)
    z = interior_point(rng, a.orthant, q_dims)
    d = rng.normal(size=s.shape[0])

    py = cases(kernels_py, s, z, d, a.orthant, q_starts, q_dims)
    cy = cases(_kernels, s, z, d, a.orthant, q_starts, q_dims) if _kernels is not None else None
    if cy is None:
        print("compiled kernels not built; timing the numpy fallback only", file=sys.stderr)

    print(f"orthant {a.orthant}, {a.cones} cones of dim {a.dim}, {a.repeat} calls each")
    print(f"{'kernel':<12} {'numpy us':>10} {'cython us':>10} {'speedup':>8}")
    for name, f in py.items():
        t_py = timeit.timeit(f, number=a.repeat) / a.repeat * 1e6
        if cy is None:
            print(f"{name:<12} {t_py:>10.1f} {'-':>10} {'-':>8}")
            continue
        # same answers before comparing speed
        check(f(), cy[name]())
        t_cy = timeit.timeit(cy[name], number=a.repeat) / a.repeat * 1e6
        print(f"{name:<12} {t_py:>10.1f} {t_cy:>10.1f} {t_py / t_cy:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
