"""Backend benchmark: compiled kernels vs the pure-Python fallback.

Runs the same seeded workload on both backends, verifies the outputs are
identical (same per-update query counts, same final solution), and reports
wall times. Also microbenchmarks the two hot kernels in isolation.

    python -m dynsubmax.bench [--n 3000] [--k 8] [--seed 0]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ._backend import HAVE_COMPILED
from .baselines import offline_greedy
from .dyncore import Params
from .harness import StreamSpec, generate_stream, run_experiment
from .instances import mixed_instance


def _workload(backend, n, k, eps, seed, trial_factor):
    instance = mixed_instance(n, seed, backend=backend)
    spec = StreamSpec(mode="sliding_window", n=n, param=max(10, n // 10), seed=seed)
    stream = generate_stream(spec, instance)
    guess = offline_greedy(range(min(n, max(10, n // 10))), k, instance).value
    params = Params(k=k, eps=eps, trial_factor=trial_factor, rng_seed=seed)
    t0 = time.perf_counter()
    metrics = run_experiment(stream, instance, params, mode=guess)
    elapsed = time.perf_counter() - t0
    return metrics, elapsed


def _microbench(backend, n, seed):
    instance = mixed_instance(n, seed, backend=backend)
    rng = np.random.default_rng(seed)
    ids = instance.element_ids
    base = np.sort(rng.choice(ids, size=8, replace=False)).astype(np.int64)
    cands = np.asarray(sorted(set(ids.tolist()) - set(base.tolist())), dtype=np.int64)
    out = np.empty(cands.size, dtype=np.float64)
    base_rows = instance.rows_for(base)
    cand_rows = instance.rows_for(cands)
    base_val = instance._value_rows(base_rows)
    reps = 20
    t0 = time.perf_counter()
    for _ in range(reps):
        instance._marginals_rows(base_rows, base_val, cand_rows, out)
    t_marg = (time.perf_counter() - t0) / (reps * cands.size)

    bucket_rows = cand_rows[:200]
    draws = np.empty((5000, 4), dtype=np.int64)
    for j in range(4):
        draws[:, j] = rng.integers(j, bucket_rows.size, size=5000)
    t0 = time.perf_counter()
    hits = instance._tail_hit_trials(bucket_rows, base_rows, 0.5, draws, 4)
    t_trial = (time.perf_counter() - t0) / 5000
    return t_marg, t_trial, hits


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="python -m dynsubmax.bench", description=__doc__)
    p.add_argument("--n", type=int, default=3000)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--eps", type=float, default=0.08)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trial-factor", type=float, default=0.01)
    args = p.parse_args(argv)

    backends = ["compiled", "pure"] if HAVE_COMPILED else ["pure"]
    if not HAVE_COMPILED:
        print("compiled extension not built; benchmarking the pure backend only")

    results = {}
    for be in backends:
        metrics, elapsed = _workload(be, args.n, args.k, args.eps, args.seed, args.trial_factor)
        t_marg, t_trial, hits = _microbench(be, args.n, args.seed)
        results[be] = (metrics, elapsed, t_marg, t_trial, hits)
        amortized = metrics.cumulative_queries / max(1, len(metrics.per_update_queries))
        print(f"[{be}] stream: {len(metrics.per_update_queries)} updates, "
              f"{metrics.cumulative_queries} queries ({amortized:.1f}/update), {elapsed:.2f}s")
        print(f"[{be}] kernels: marginal {t_marg * 1e6:.2f} us/candidate, "
              f"sampling trial {t_trial * 1e6:.2f} us/trial")

    if len(results) == 2:
        mc, tc = results["compiled"][0], results["compiled"][1]
        mp, tp = results["pure"][0], results["pure"][1]
        same = (mc.per_update_queries == mp.per_update_queries
                and results["compiled"][4] == results["pure"][4])
        print(f"backends agree on query counts and trial hits: {same}")
        print(f"end-to-end speedup: {tp / tc:.1f}x, "
              f"marginal kernel: {results['pure'][2] / results['compiled'][2]:.1f}x, "
              f"trial kernel: {results['pure'][3] / results['compiled'][3]:.1f}x")
        if not same:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
