#!/usr/bin/env python3
"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Usage:
    python3 benchmarks/bench_kernels.py [--pipeline]

The same comparison can be reproduced end to end by running the test suite
with FAIR_CONTEXT_NUMBA=0 versus the default.
"""

import argparse
import time

import numpy as np

from fair_context import _kernels


def _time(fn, *args, repeats=5):
    fn(*args)   # warmup (includes JIT compilation for the numba path)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def bench_knn():
    rng = np.random.default_rng(0)
    rows = []
    for n_ctx, n_query, m in [(2000, 500, 8), (8000, 1000, 8), (10000, 2000, 16)]:
        ctx = rng.normal(size=(n_ctx, m))
        y = rng.integers(0, 2, n_ctx).astype(float)
        q = rng.normal(size=(n_query, m))
        t_np = _time(_kernels._knn_vote_numpy, ctx, y, q, 16)
        if _kernels.NUMBA_ACTIVE:
            t_nb = _time(_kernels._knn_vote_numba, ctx, y, q, 16)
            np.testing.assert_allclose(_kernels._knn_vote_numba(ctx, y, q, 16),
                                       _kernels._knn_vote_numpy(ctx, y, q, 16),
                                       atol=1e-12)
        else:
            t_nb = float("nan")
        rows.append((f"knn {n_ctx}x{m} ctx, {n_query} queries", t_np, t_nb))
    return rows


def bench_logreg():
    rng = np.random.default_rng(1)
    rows = []
    for n, m in [(2000, 8), (10000, 16), (20000, 32)]:
        X = rng.normal(size=(n, m))
        y = rng.integers(0, 2, n).astype(float)
        t_np = _time(_kernels._logreg_gd_numpy, X, y, 1e-4, 0.1, 200, 1e-6, repeats=3)
        if _kernels.NUMBA_ACTIVE:
            t_nb = _time(_kernels._logreg_gd_numba, X, y, 1e-4, 0.1, 200, 1e-6, repeats=3)
        else:
            t_nb = float("nan")
        rows.append((f"logreg gd {n}x{m}, 200 iters", t_np, t_nb))
    return rows


def bench_pipeline():
    from fair_context.harness import RunConfig, run_pipeline
    from fair_context.tabular import SynthSpec, generate_synthetic

    ds = generate_synthetic(SynthSpec(n=8000, m_z=6, mean_shift=0.5, label_bias=1.0,
                                      label_weights=1.0, noise_sd=1.0, seed=3))
    cfg = RunConfig(method="vanilla", n_seeds=3, n_folds=5, base_seed=0)
    start = time.perf_counter()
    run_pipeline(ds, cfg, jobs=1)
    total = time.perf_counter() - start
    path = "numba" if _kernels.NUMBA_ACTIVE else "numpy"
    print(f"\npipeline (vanilla, 3 seeds x 5 folds, n=8000, {path} path): {total:.2f}s")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pipeline", action="store_true",
                        help="also time a small end-to-end pipeline")
    args = parser.parse_args()

    print(f"numba path active: {_kernels.NUMBA_ACTIVE} "
          f"(set FAIR_CONTEXT_NUMBA=0 to force the numpy fallback)\n")
    print(f"{'kernel':<40} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    print("-" * 72)
    for name, t_np, t_nb in bench_knn() + bench_logreg():
        speedup = f"{t_np / t_nb:.1f}x" if t_nb == t_nb else "n/a"
        nb = f"{t_nb * 1e3:.1f}ms" if t_nb == t_nb else "n/a"
        print(f"{name:<40} {t_np * 1e3:>8.1f}ms {nb:>10} {speedup:>8}")
    if args.pipeline:
        bench_pipeline()


if __name__ == "__main__":
    main()
