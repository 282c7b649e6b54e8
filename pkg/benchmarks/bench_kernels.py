"""Time the numba and numpy kernel backends side by side.

Usage: ``python benchmarks/bench_kernels.py [--repeat 5] [--quick]``.
Each row reports the best-of-``repeat`` wall time per call after a warm-up
call (which also triggers numba compilation) and checks the two outputs agree.
"""

import argparse
import time

import numpy as np

from spinphase import _kernels
from spinphase.quadrature import bloch


def best_time(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def masks(rng, t, n):
    hi = 2**n
    return (rng.integers(0, hi, size=t, dtype=np.uint64), rng.integers(0, hi, size=t, dtype=np.uint64))


def bench_pair_products(rng, repeat, sizes):
    rows = []
    for n, t in sizes:
        ax, az = masks(rng, t, n)
        bx, bz = masks(rng, t, n)
        args = (ax, az, bx, bz)
        a = _kernels.numpy_impl.pair_products(*args)
        b = _kernels.numba_impl.pair_products(*args)
        same = all(np.array_equal(u, v) for u, v in zip(a, b))
        rows.append(("pair_products", f"n={n} terms={t}x{t}", best_time(_kernels.numpy_impl.pair_products, args, repeat),
                     best_time(_kernels.numba_impl.pair_products, args, repeat), same))
    return rows


def bench_eval_terms(rng, repeat, sizes):
    rows = []
    for n, t, m in sizes:
        x, z = masks(rng, t, n)
        w = rng.normal(size=t)
        th = np.arccos(rng.uniform(-1, 1, size=(m, n)))
        ph = rng.uniform(0, 2 * np.pi, size=(m, n))
        args = (x, z, w, bloch(th, ph))
        a = _kernels.numpy_impl.eval_terms(*args)
        b = _kernels.numba_impl.eval_terms(*args)
        rows.append(("eval_terms", f"n={n} terms={t} points={m}", best_time(_kernels.numpy_impl.eval_terms, args, repeat),
                     best_time(_kernels.numba_impl.eval_terms, args, repeat), bool(np.allclose(a, b, atol=1e-12))))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smallest sizes only")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _kernels.numba_impl is None:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(args.seed)
    pp_sizes = [(4, 64), (8, 256), (16, 1024)]
    ev_sizes = [(2, 16, 10_000), (4, 256, 10_000), (8, 1024, 4096)]
    if args.quick:
        pp_sizes, ev_sizes = pp_sizes[:1], ev_sizes[:1]
    rows = bench_pair_products(rng, args.repeat, pp_sizes) + bench_eval_terms(rng, args.repeat, ev_sizes)
    print(f"{'kernel':<14} {'size':<30} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}  agree")
    for name, size, t_np, t_nb, same in rows:
        print(f"{name:<14} {size:<30} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:8.2f}  {same}")
    return 0 if all(r[-1] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
