"""Time the numba loop kernels against their numpy fallbacks.

    python3 benchmarks/bench_backends.py [--repeat 5]

Each row reports the best of ``--repeat`` wall-clock runs after one warm-up
call (the warm-up also absorbs numba compilation). With numba disabled the
loop column runs as plain Python and is skipped for the large sizes.
"""

import argparse
import time

import numpy as np

from spf import kernels
from spf._accel import backend


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    for n in (10, 14, 18):
        f = rng.uniform(-20, 20, 1 << n)
        d = rng.uniform(0, 5, n)
        yield "subset_clamp", n, (lambda f=f, d=d: kernels.subset_clamp_loop(f, d, 1e-12),
                                  lambda f=f, d=d: kernels.subset_clamp_numpy(f, d, 1e-12))
    for n in (10, 14):
        f = rng.uniform(-20, 20, (1 << n, 2))
        d = rng.uniform(0, 5, n)
        yield "lattice_chain", n, (lambda f=f, d=d: kernels.lattice_chain_loop(f, d),
                                   lambda f=f, d=d: kernels.lattice_chain_numpy(f, d))
    for n in (200, 1000, 2000):
        x = np.sort(rng.uniform(-100, 100, n))
        yield "ordered_windows/mean", n, (
            lambda x=x: kernels.ordered_windows_loop(x, kernels.MEAN, 0.1, 0.0, 1.0),
            lambda x=x: kernels.ordered_windows_numpy(x, kernels.MEAN, 0.1, 0.0, 1.0))
        yield "ordered_windows/median", n, (
            lambda x=x: kernels.ordered_windows_loop(x, kernels.MEDIAN, 0.1, 0.0, 1.0),
            lambda x=x: kernels.ordered_windows_numpy(x, kernels.MEDIAN, 0.1, 0.0, 1.0))
        yield "variance_windows", n, (lambda x=x: kernels.variance_windows_loop(x, 1.0),
                                      lambda x=x: kernels.variance_windows_numpy(x, 1.0))
    for nodes in (64, 512):
        m = nodes * 8
        src = rng.integers(0, nodes, m).astype(np.int64)
        dst = rng.integers(0, nodes, m).astype(np.int64)
        w = rng.uniform(0, 3, m)
        yield "bellman_ford", nodes, (
            lambda s=src, t=dst, w=w, k=nodes: kernels.bellman_ford_loop(k, s, t, w, 1e-12),
            lambda s=src, t=dst, w=w, k=nodes: kernels.bellman_ford_numpy(k, s, t, w, 1e-12))
    centers = rng.uniform(-1, 1, (7, 3))
    radii = rng.uniform(0.5, 2, 7)
    lo = np.full(3, -2.0)
    for side in (41, 101):
        counts = np.full(3, side, dtype=np.int64)
        step = 4.0 / (side - 1)
        yield "grid_min_violation", side ** 3, (
            lambda c=counts, s=step: kernels.grid_min_violation_loop(centers, radii, lo, s, c, 1),
            lambda c=counts, s=step: kernels.grid_min_violation_numpy(centers, radii, lo, s, c, 1))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    compiled = backend() == "numba"
    print(f"backend: {backend()}")
    print(f"{'kernel':<24}{'size':>9}{'loop ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, size, (loop, vec) in cases(np.random.default_rng(args.seed)):
        t_vec = best_of(vec, args.repeat) * 1e3
        if compiled or size <= 1 << 10:
            t_loop = best_of(loop, args.repeat) * 1e3
            print(f"{name:<24}{size:>9}{t_loop:>12.3f}{t_vec:>12.3f}{t_vec / t_loop:>9.1f}x")
        else:
            print(f"{name:<24}{size:>9}{'-':>12}{t_vec:>12.3f}{'-':>10}")


if __name__ == "__main__":
    main()
