#!/usr/bin/env python3
"""Benchmark the numba-compiled box-QP kernel against the pure numpy path.

The cyclic coordinate-ascent sweep is the trainer's hot spot (one dual QP
per node per ADMM round). This script times both backends on representative
instance sizes and a real 6-node training run.

Run:  python3 benchmarks/bench_solvers.py
"""

import math
import time

import numpy as np

from dsvmsim._accel import NUMBA_ENABLED
from dsvmsim.data import gen_gaussian, partition
from dsvmsim.engine import EngineConfig, train
from dsvmsim.kernels import _box_qp_sweeps_jit, _box_qp_sweeps_numpy
from dsvmsim.topology import build_complete


def time_backend(impl, instances, repeats=5):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for quad, lin, upper in instances:
            lam = np.zeros(lin.shape[0])
            grad = lin.copy()
            impl(quad, lin, upper, lam, grad, 1e-8, 200)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels():
    rng = np.random.default_rng(0)
    print(f"{'N':>5} {'numba (ms)':>12} {'numpy (ms)':>12} {'speedup':>9}")
    for n in (20, 40, 80, 160):
        instances = []
        for _ in range(30):
            a = rng.standard_normal((n, n))
            quad = np.ascontiguousarray(a.T @ a / n)
            instances.append((quad, rng.standard_normal(n), rng.uniform(0, 5, n)))
        # warm up the JIT before timing
        q, l, u = instances[0]
        _box_qp_sweeps_jit(q, l, u, np.zeros(n), l.copy(), 1e-8, 5)
        t_jit = time_backend(_box_qp_sweeps_jit, instances)
        t_np = time_backend(_box_qp_sweeps_numpy, instances, repeats=2)
        print(f"{n:>5} {1e3 * t_jit:>12.2f} {1e3 * t_np:>12.2f} {t_np / t_jit:>8.1f}x")


def bench_training():
    net = build_complete(6)
    per_class = math.ceil(6 * 540 / 2)
    pool, _ = gen_gaussian(per_class, 1, seed=0)
    nodes = partition(pool, net, 40, 500, seed=0)
    cfg = EngineConfig(max_iters=200, consensus_tol=0)
    train(net, nodes, cfg)  # warm-up
    t0 = time.perf_counter()
    train(net, nodes, cfg)
    dt = time.perf_counter() - t0
    backend = "numba" if NUMBA_ENABLED else "numpy"
    print(f"\n6-node training, 200 rounds, active backend = {backend}: {dt:.2f} s")
    print("(set DSVMSIM_NUMBA=0 and re-run to time the numpy fallback end to end)")


if __name__ == "__main__":
    print(f"numba backend available and enabled: {NUMBA_ENABLED}")
    bench_kernels()
    bench_training()
