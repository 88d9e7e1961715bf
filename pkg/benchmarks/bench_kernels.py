"""Compare the compiled and pure-Python batch kernels.

Times estimate_batch + score_batch on the desk-scale exam (n=50, m=20,
ell=10, K=4) for R replicas, checks both backends agree, and prints a table.

    python3 benchmarks/bench_kernels.py [--replicas 10000] [--coverage 1] [--repeat 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from skillcheck import kernels
from skillcheck.assignment import build_assignment
from skillcheck.kernels import BatchLayout, estimate_batch, score_batch
from skillcheck.pg1_model import RngStream


def inputs(R: int, coverage: int, seed: int = 0):
    m = 20 * coverage
    plan = build_assignment(50, m, 10, 4, coverage, RngStream(seed, 0))
    lay = BatchLayout.from_plan(plan)
    g = np.random.default_rng(seed)
    mm, x = lay.probe_papers.shape
    h = lay.slot_papers.shape[1]
    dev = g.normal(0.0, 2.0, (R, mm, x))
    rep = g.normal(50.0, 10.0, (R, mm, h))
    y_np = g.normal(50.0, 10.0, (R, len(lay.nonprobe_ids)))
    return lay, dev, rep, y_np


def run(backend, lay, dev, rep, y_np):
    b, tau = estimate_batch(dev, 1e6, 1e-12, backend)
    return score_batch(b, tau, rep, lay.graders, y_np, 50.0, 0.1, False, 1.0, backend)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicas", type=int, default=10_000)
    ap.add_argument("--coverage", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    data = inputs(args.replicas, args.coverage)
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    results = {be: run(be, *data) for be in backends}
    if len(backends) == 2:
        for a, c in zip(results["python"], results["cython"]):
            np.testing.assert_allclose(a, c, atol=1e-9, rtol=0)

    print(f"R={args.replicas} coverage={args.coverage} (n=50, m={20 * args.coverage}, ell=10, K=4)")
    print(f"{'backend':<8} {'seconds':>10} {'replicas/s':>12}")
    times = {}
    for be in backends:
        times[be] = best_of(lambda: run(be, *data), args.repeat)
        print(f"{be:<8} {times[be]:>10.4f} {args.replicas / times[be]:>12.0f}")
    if len(times) == 2:
        print(f"speedup  {times['python'] / times['cython']:>10.2f}x")
    else:
        print("compiled backend not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
