"""Parallel runs over geometric OPT guesses.

Removes the known-OPT assumption: run p uses the guess (1+eps_opt)^p, and
an element joins exactly the runs whose guess brackets its singleton value
(f(e) within [eps * guess / (2k), guess]). Runs are created lazily on first
membership and torn down when their last live member is deleted. The best
solution is the maximum-value output across live runs.
"""

from __future__ import annotations

import math

from .dyncore import REL_TOL, Params, RunState
from .errors import DuplicateElementError, UnknownElementError
from .oracle import CountingOracle

__all__ = ["run_index_range", "ParallelRuns"]


def run_index_range(f_e: float, params: Params) -> range:
    """Run indices whose OPT guess admits an element of singleton value f_e."""
    if f_e <= 0.0:
        return range(0, 0)
    lb = math.log1p(params.eps_opt)
    snap = REL_TOL / lb
    p_lo = math.ceil(math.log(f_e) / lb - snap)
    p_hi = math.floor((math.log(f_e) + math.log(2.0 * params.k / params.eps)) / lb + snap)
    return range(p_lo, p_hi + 1)


def fan_out_bound(params: Params) -> int:
    """Maximum number of runs any one element can belong to."""
    return math.ceil(math.log(2.0 * params.k / params.eps) / math.log1p(params.eps_opt)) + 1


class ParallelRuns:
    """Routes a stream of updates to the member runs of each element."""

    def __init__(self, fn, params: Params, cache_size: int = 65536):
        self.fn = fn
        self.params = params
        self.cache_size = int(cache_size)
        self.router = CountingOracle(fn, cache_size)
        self.runs: dict[int, RunState] = {}
        self._members: dict[int, tuple[float, range]] = {}
        self._dead: set[int] = set()
        self._run_live: dict[int, int] = {}
        self._retired_queries = 0
        self._retired_instr = 0

    # updates ----------------------------------------------------------

    def insert(self, e: int):
        e = int(e)
        if e in self._members or e in self._dead:
            raise DuplicateElementError(f"element {e} was already inserted")
        f_e = self.router.eval([e])
        span = run_index_range(f_e, self.params)
        self._members[e] = (f_e, span)
        for p in span:
            run = self.runs.get(p)
            if run is None:
                run = RunState(
                    CountingOracle(self.fn, self.cache_size),
                    (1.0 + self.params.eps_opt) ** p,
                    self.params,
                    seed_extra=(p + 2 ** 31,),
                )
                self.runs[p] = run
                self._run_live[p] = 0
            run.insert(e)
            self._run_live[p] += 1

    def delete(self, e: int):
        e = int(e)
        if e not in self._members:
            raise UnknownElementError(e)
        _, span = self._members.pop(e)
        self._dead.add(e)
        for p in span:
            run = self.runs[p]
            run.delete(e)
            self._run_live[p] -= 1
            if self._run_live[p] == 0:
                self._retired_queries += run.oracle.query_count()
                self._retired_instr += run.oracle.instrumentation_count()
                del self.runs[p]
                del self._run_live[p]

    # reporting ----------------------------------------------------------

    def best_solution(self):
        """Solution of the maximum-value run; ties go to the smallest index."""
        best_set: set = set()
        best_val = 0.0
        for p in sorted(self.runs):
            sol, val = self.runs[p].solution()
            if val > best_val:
                best_set, best_val = sol, val
        return best_set, best_val

    def live_count(self) -> int:
        return len(self._members)

    def membership(self, e: int) -> range:
        return self._members[int(e)][1]

    def singleton_value(self, e: int) -> float:
        return self._members[int(e)][0]

    def query_count(self) -> int:
        return (self.router.query_count() + self._retired_queries
                + sum(r.oracle.query_count() for r in self.runs.values()))

    def instrumentation_count(self) -> int:
        return (self.router.instrumentation_count() + self._retired_instr
                + sum(r.oracle.instrumentation_count() for r in self.runs.values()))

    def check_invariants(self):
        for p in sorted(self.runs):
            self.runs[p].check_invariants()
