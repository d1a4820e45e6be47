"""Time the numba kernels against their numpy counterparts.

Usage: python3 benchmarks/bench_kernels.py [--edges 2000] [--triangles 3000] [--repeat 5]

With numba disabled (ASYMOP_DISABLE_NUMBA=1) the "numba" column times the
same functions as interpreted Python.
"""
import argparse
import time

import numpy as np

from asymop import kernels
from asymop.balance import CONFIGS, DEFAULT_BALANCED, CostParams, edge_costs, triangle_costs_relaxed


def best_of(fn, repeat):
    fn()  # warm-up (includes JIT compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def grid_tables(f, tri, n=6):
    g = np.arange(n) / (n - 1)
    edge_tab = np.stack([edge_costs(g, np.full(n, fe)) for fe in f])
    mesh = np.stack(np.meshgrid(g, g, g, g, indexing="ij"), axis=-1).reshape(-1, 4)
    base = triangle_costs_relaxed(mesh).reshape(n, n, n, n)
    order = np.argsort(tri, axis=1)
    tri_tab = np.stack([np.transpose(base, o).ravel() for o in order])
    return edge_tab, tri_tab, np.take_along_axis(tri, order, axis=1)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--edges", type=int, default=2000)
    ap.add_argument("--triangles", type=int, default=3000)
    ap.add_argument("--iters", type=int, default=500, help="descent iterations")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    e, t = args.edges, args.triangles
    f = rng.uniform(size=e)
    s = rng.uniform(size=e)
    tri = np.array([rng.choice(e, 4, replace=False) for _ in range(t)], dtype=np.int64)
    p = CostParams().as_array()
    obj = (s, f, tri, CONFIGS, DEFAULT_BALANCED, p)
    desc = (*obj, args.iters, 0.1, 0.0, args.iters)  # tol 0 so both run every iteration

    small_f = rng.uniform(size=6)
    small_tri = np.array([rng.choice(6, 4, replace=False) for _ in range(2)], dtype=np.int64)
    grid = grid_tables(small_f, small_tri)

    cases = [
        (f"objective ({e} edges, {t} triangles)", kernels._objective_nb, kernels._objective_np, obj),
        ("subgradient", kernels._subgradient_nb, kernels._subgradient_np, obj),
        (f"descend ({args.iters} iterations)", kernels._descend_nb, kernels._descend_np, desc),
        ("grid_search (6 edges, 2 triangles, 6 levels)", kernels._grid_search_nb, kernels._grid_search_np, grid),
    ]
    print(f"backend={kernels.BACKEND}  best of {args.repeat}")
    print(f"{'kernel':48s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speedup':>9s}")
    for name, nb, npf, a in cases:
        t_nb = best_of(lambda: nb(*a), args.repeat)
        t_np = best_of(lambda: npf(*a), args.repeat)
        print(f"{name:48s} {t_nb:12.6f} {t_np:12.6f} {t_np / t_nb:9.1f}x")


if __name__ == "__main__":
    main()
