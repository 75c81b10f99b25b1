"""Compare the compiled and pure-Python kernels on representative workloads.

    python benchmarks/bench_kernels.py [--repeat N]

Each workload runs on every available backend; results are checked for
equality before timings are reported.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from kirinlab.ilp import branch_and_bound_solve, build_transit_model
from kirinlab.ilp.solve import _Compiled
from kirinlab.kernels import backends
from kirinlab.topology import SessionMatrix


def _matrix(seed: int, n_as: int, n_lan: int) -> SessionMatrix:
    rng = random.Random(seed)
    omega = {
        (1000 + a, f"L{l}"): rng.randint(1, 4) for a in range(n_as) for l in range(n_lan) if rng.random() < 0.5
    }
    return SessionMatrix(
        dict(sorted(omega.items())), tuple(f"L{l}" for l in range(n_lan)), tuple(1000 + a for a in range(n_as))
    )


def bench_brute_force(impl):
    # 3 ASes x 3 LANs: at most 15 variables per model
    comps = [_Compiled(build_transit_model(_matrix(s, 3, 3), 2, 2)) for s in range(20)]
    args = [(c.c, c.dense_At(), c.b) for c in comps]
    t = time.perf_counter()
    out = [impl.brute_force_max(*a) for a in args]
    return time.perf_counter() - t, out


def bench_greedy(impl):
    limits = np.full(1000, 1000, dtype=np.int64)
    t = time.perf_counter()
    owner = impl.greedy_assign(19, limits, True)
    return time.perf_counter() - t, int((owner >= 0).sum())


def bench_propagate(impl):
    comp = _Compiled(build_transit_model(_matrix(1, 30, 8), 4, 5))
    rng = np.random.default_rng(0)
    starts = []
    for _ in range(2000):
        x = np.full(len(comp.names), -1, dtype=np.int8)
        pick = rng.choice(len(x), size=len(x) // 4, replace=False)
        x[pick] = rng.integers(0, 2, size=pick.size, dtype=np.int8)
        starts.append(x)
    t = time.perf_counter()
    out = []
    for x in starts:
        y = x.copy()
        ok = impl.propagate(y, comp.indptr, comp.indices, comp.data, comp.b, comp.colptr, comp.colrows)
        out.append((ok, y.tobytes()))
    return time.perf_counter() - t, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    impls = backends()
    print(f"backends: {', '.join(impls)}")
    for name, fn in (("brute_force_max", bench_brute_force), ("greedy_assign", bench_greedy), ("propagate", bench_propagate)):
        results = {}
        for backend, impl in impls.items():
            times = []
            for _ in range(args.repeat):
                dt, out = fn(impl)
                times.append(dt)
            results[backend] = (min(times), out)
        outs = [r[1] for r in results.values()]
        same = all(o == outs[0] for o in outs[1:])
        line = "  ".join(f"{b}={t * 1e3:9.2f} ms" for b, (t, _) in results.items())
        if "cython" in results:
            line += f"  speedup={results['python'][0] / results['cython'][0]:7.1f}x"
        print(f"{name:16s} {line}  identical={same}")
    t = time.perf_counter()
    sol = branch_and_bound_solve(build_transit_model(_matrix(5, 30, 8), 4, 5))
    print(f"end-to-end B&B (30x8, L=4, P=5): {sol.objective_value} {sol.status.value} in {time.perf_counter() - t:.3f} s")


if __name__ == "__main__":
    main()
