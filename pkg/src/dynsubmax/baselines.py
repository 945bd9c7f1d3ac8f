"""Reference algorithms: offline greedy and exact brute force on tiny inputs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InstanceTooLargeError
from .oracle import CountingOracle

__all__ = ["BaselineResult", "offline_greedy", "brute_force_opt"]


@dataclass(frozen=True)
class BaselineResult:
    chosen: frozenset
    value: float
    queries: int


def offline_greedy(elements, k: int, fn) -> BaselineResult:
    """Iteratively add the maximum-marginal element (ties to the smallest id).

    Stops after k picks or when no remaining element has positive gain.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    oracle = CountingOracle(fn)
    ids = np.asarray(sorted(set(int(e) for e in elements)), dtype=np.int64)
    chosen: list[int] = []
    value = 0.0
    remaining = ids
    for _ in range(k):
        if remaining.size == 0:
            break
        base = np.asarray(chosen, dtype=np.int64)
        base.sort()
        gains = oracle.marginals_ids(base, value, remaining)
        best = int(np.argmax(gains))
        if gains[best] <= 0.0:
            break
        chosen.append(int(remaining[best]))
        remaining = np.delete(remaining, best)
        value = oracle.eval(chosen)
    return BaselineResult(frozenset(chosen), value, oracle.query_count())


def brute_force_opt(elements, k: int, fn, limit: int = 10 ** 6) -> BaselineResult:
    """Exact optimum over all subsets of size <= k (tiny instances only).

    Ties break to the lexicographically smallest id tuple. Refuses to run
    when C(|V|, k) exceeds the limit.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ids = sorted(set(int(e) for e in elements))
    n = len(ids)
    if math.comb(n, min(k, n)) > limit:
        raise InstanceTooLargeError(
            f"C({n}, {min(k, n)}) exceeds the enumeration limit {limit}")
    oracle = CountingOracle(fn)
    best_ids: tuple = ()
    best_val = 0.0
    for size in range(1, min(k, n) + 1):
        for combo in combinations(ids, size):
            val = oracle.eval(combo)
            if val > best_val or (val == best_val and combo < best_ids):
                best_val = val
                best_ids = combo
    return BaselineResult(frozenset(best_ids), best_val, oracle.query_count())
