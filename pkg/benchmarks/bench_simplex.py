"""Compare the compiled and pure-numpy simplex iteration kernels.

Run with ``python benchmarks/bench_simplex.py``. Both backends solve the same
causal-polytope LPs and random dense LPs; objective values must agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from causality_kit.correlations import Scenario
from causality_kit.generators import random_table
from causality_kit.lp import KERNEL_BACKEND, LinearProgram, solve
from causality_kit.polytope import causal_bound, causal_membership, ocb_game


def _timed(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _agree(a, b) -> bool:
    if isinstance(a, list):
        return a == b
    return abs(float(a) - float(b)) <= 1e-8


def workloads(seed: int):
    rng = np.random.default_rng(seed)
    abc = Scenario(("A", "B", "C"), (2, 2, 2), (2, 2, 2))
    tables = [random_table(abc, rng) for _ in range(3)]
    A = rng.normal(size=(120, 300))
    lp = LinearProgram(A.tolist(), (A @ rng.uniform(size=300)).tolist(), rng.uniform(size=300).tolist())
    yield "causal bound (2222 game)", lambda b: causal_bound(ocb_game(), backend=b).value
    yield "tripartite membership x3", lambda b: [causal_membership(t, backend=b).status for t in tables]
    yield "dense LP 120x300", lambda b: solve(lp, backend=b).objective


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if KERNEL_BACKEND != "cython":
        print("compiled kernel not built; only the numpy backend is available")
    backends = ["numpy"] + (["cython"] if KERNEL_BACKEND == "cython" else [])
    header = f"{'workload':28s}" + "".join(f"{b:>12s}" for b in backends)
    print(header + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in workloads(args.seed):
        times, results = [], []
        for b in backends:
            t, r = _timed(lambda: fn(b), args.repeat)
            times.append(t)
            results.append(r)
        if len(results) > 1 and not _agree(*results):
            raise SystemExit(f"backends disagree on {name}: {results}")
        row = f"{name:28s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[0] / times[1]:11.2f}x"
        print(row)


if __name__ == "__main__":
    main()
