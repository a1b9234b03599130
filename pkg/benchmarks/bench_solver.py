"""Compare the numba and numpy solver kernels on random constraint graphs.

    python benchmarks/bench_solver.py [--sizes 1000 10000 100000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from mini3c import _kernels
from mini3c.graph import PTYP, CGraph, solve_greatest, solve_least


def random_graph(n_vars: int, n_edges: int, seed: int) -> CGraph:
    rng = np.random.default_rng(seed)
    g = CGraph(PTYP, [f"v{i}" for i in range(n_vars)])
    # mostly forward edges so chains are long, like value flow in real programs
    src = rng.integers(0, n_vars, n_edges)
    step = rng.integers(1, 8, n_edges)
    dst = np.minimum(src + step, n_vars - 1)
    for x, y in zip(src.tolist(), dst.tolist()):
        g.add_edge(x, y, "flow")
    for v in rng.choice(n_vars, max(1, n_vars // 50), replace=False).tolist():
        g.add_edge(g.literal("arr"), v, "alloc")
    for v in rng.choice(n_vars, max(1, n_vars // 100), replace=False).tolist():
        g.add_edge(v, g.literal("ptr"), "pin")
    return g


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    _kernels.warmup()
    print(f"{'vars':>8} {'edges':>8} " + " ".join(f"{b + ' least':>14} {b + ' greatest':>16}" for b in backends)
          + ("   speedup" if len(backends) == 2 else ""))
    for n in args.sizes:
        g = random_graph(n, 3 * n, seed=n)
        row = []
        results = {}
        for b in backends:
            lo = best_of(lambda: solve_least(g, backend=b), args.repeat)
            hi = best_of(lambda: solve_greatest(g, backend=b), args.repeat)
            results[b] = (solve_least(g, backend=b).values, solve_greatest(g, backend=b).values)
            row += [lo, hi]
        if len(backends) == 2:
            assert all(np.array_equal(x, y) for x, y in zip(results["numpy"], results["numba"]))
        line = f"{n:>8} {len(g.edges):>8} " + " ".join(f"{t * 1e3:>12.2f}ms" for t in row)
        if len(backends) == 2:
            line += f"   {(row[0] + row[1]) / (row[2] + row[3]):7.1f}x"
        print(line)

    print()
    print("kernel only (prebuilt arrays, least fixpoint + reachability):")
    for n in args.sizes:
        g = random_graph(n, 3 * n, seed=n)
        src, dst = g.arrays()
        val = np.zeros(g.n_nodes, dtype=np.int64)
        fixed = np.zeros(g.n_nodes, dtype=np.bool_)
        for k in range(len(g.lattice.elements)):
            val[g.n_vars + k] = k
            fixed[g.n_vars + k] = True
        times = {}
        for b in backends:
            fix = best_of(lambda: _kernels.raise_to_fixpoint(val.copy(), fixed, src, dst, True, b), args.repeat)
            reach = best_of(lambda: _kernels.reachable(g.n_nodes, src, dst, [0], b), args.repeat)
            times[b] = (fix, reach)
        parts = " ".join(f"{b}: fixpoint {t[0] * 1e3:8.2f}ms reach {t[1] * 1e3:8.2f}ms" for b, t in times.items())
        if len(backends) == 2:
            parts += f"   speedup {sum(times['numpy']) / sum(times['numba']):7.1f}x"
        print(f"{n:>8} {parts}")


if __name__ == "__main__":
    main()
