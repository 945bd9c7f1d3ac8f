"""Benchmark and experiment driver.

Generates update streams, replays them through a single known-OPT run or
the parallel-runs manager, and collects per-update oracle-query deltas plus
periodic solution-quality checkpoints. Checkpoint evaluations (solution
value, greedy and brute-force references) run on instrumentation counters
and never leak into the per-update accounting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import brute_force_opt, offline_greedy
from .dyncore import Params, RunState
from .oracle import CountingOracle
from .runs import ParallelRuns

__all__ = [
    "UpdateEvent",
    "StreamSpec",
    "Checkpoint",
    "StreamMetrics",
    "generate_stream",
    "run_experiment",
    "emit_results",
]

STREAM_MODES = ("insert_then_delete", "sliding_window", "interleaved")


@dataclass(frozen=True)
class UpdateEvent:
    kind: str  # "insert" | "delete"
    element: int
    t: int


@dataclass(frozen=True)
class StreamSpec:
    """Workload description; `param` is the mode's fraction/width/probability."""

    mode: str
    n: int
    param: float
    seed: int = 0

    def __post_init__(self):
        if self.mode not in STREAM_MODES:
            raise ValueError(f"unknown stream mode {self.mode!r}")
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if self.mode == "insert_then_delete" and not 0.0 <= self.param <= 1.0:
            raise ValueError("deletion fraction must lie in [0, 1]")
        if self.mode == "sliding_window" and not self.param >= 1:
            raise ValueError("window width must be >= 1")
        if self.mode == "interleaved" and not 0.0 <= self.param < 1.0:
            raise ValueError("deletion probability must lie in [0, 1)")


@dataclass(frozen=True)
class Checkpoint:
    t: int
    solution_value: float
    greedy_value: float | None
    opt_value: float | None
    live_count: int


@dataclass
class StreamMetrics:
    per_update_queries: list = field(default_factory=list)
    cumulative_queries: int = 0
    instrumentation_queries: int = 0
    checkpoints: list = field(default_factory=list)


def generate_stream(spec: StreamSpec, instance) -> list[UpdateEvent]:
    """Deterministic oblivious update stream over the instance's elements."""
    ids = instance.element_ids
    if spec.n > ids.size:
        raise ValueError(f"stream wants {spec.n} elements, instance has {ids.size}")
    rng = np.random.default_rng(spec.seed)
    order = [int(e) for e in rng.permutation(ids)[: spec.n]]
    events: list[UpdateEvent] = []

    def emit(kind, e):
        events.append(UpdateEvent(kind, e, len(events)))

    if spec.mode == "insert_then_delete":
        for e in order:
            emit("insert", e)
        n_del = int(math.floor(spec.param * spec.n))
        doomed = rng.permutation(order)[:n_del]
        for e in doomed.tolist():
            emit("delete", int(e))
    elif spec.mode == "sliding_window":
        w = int(spec.param)
        live: list[int] = []
        for e in order:
            emit("insert", e)
            live.append(e)
            if len(live) > w:
                emit("delete", live.pop(0))
    else:  # interleaved
        live = []
        i = 0
        while i < len(order):
            if live and rng.random() < spec.param:
                victim = live.pop(int(rng.integers(len(live))))
                emit("delete", victim)
            else:
                emit("insert", order[i])
                live.append(order[i])
                i += 1
    return events


class _KnownOptTarget:
    def __init__(self, instance, params, opt_guess):
        self.run = RunState(CountingOracle(instance), opt_guess, params)

    def insert(self, e):
        self.run.insert(e)

    def delete(self, e):
        self.run.delete(e)

    def solution(self):
        return self.run.solution()

    def query_count(self):
        return self.run.oracle.query_count()

    def instrumentation_count(self):
        return self.run.oracle.instrumentation_count()

    def check_invariants(self):
        self.run.check_invariants()


def run_experiment(stream, instance, params: Params, mode="parallel",
                   checkpoint_every: int = 0, check_invariants: bool = False,
                   greedy_limit: int = 2000, brute_limit: int = 10 ** 6) -> StreamMetrics:
    """Replay a stream and collect per-update query counts and checkpoints.

    `mode` is either the string "parallel" or a positive number used as the
    known OPT guess of a single run. `checkpoint_every` of 0 records only a
    final checkpoint; n > 0 records one every n updates (plus the final one).
    """
    if mode == "parallel":
        target = ParallelRuns(instance, params)
    else:
        target = _KnownOptTarget(instance, params, float(mode))
    metrics = StreamMetrics()
    live: set[int] = set()
    instr_base = 0

    for idx, ev in enumerate(stream):
        before = target.query_count()
        if ev.kind == "insert":
            target.insert(ev.element)
            live.add(ev.element)
        elif ev.kind == "delete":
            target.delete(ev.element)
            live.discard(ev.element)
        else:
            raise ValueError(f"unknown event kind {ev.kind!r}")
        metrics.per_update_queries.append(target.query_count() - before)
        if check_invariants:
            target.check_invariants()
        is_last = idx == len(stream) - 1
        if (checkpoint_every and (idx + 1) % checkpoint_every == 0) or is_last:
            if mode == "parallel":
                _, sol_val = target.best_solution()
            else:
                _, sol_val = target.solution()
            greedy_val = None
            opt_val = None
            if live and len(live) <= greedy_limit:
                g = offline_greedy(live, params.k, instance)
                greedy_val = g.value
                instr_base += g.queries
            if live and math.comb(len(live), min(params.k, len(live))) <= brute_limit:
                b = brute_force_opt(live, params.k, instance, limit=brute_limit)
                opt_val = b.value
                instr_base += b.queries
            metrics.checkpoints.append(Checkpoint(
                t=ev.t, solution_value=sol_val, greedy_value=greedy_val,
                opt_value=opt_val, live_count=len(live)))

    metrics.cumulative_queries = int(sum(metrics.per_update_queries))
    metrics.instrumentation_queries = instr_base + target.instrumentation_count()
    return metrics


def _fmt(x) -> str:
    return "" if x is None else f"{x:.17g}"


CSV_HEADER = "t,kind,queries,cum_queries,solution_value,greedy_value,opt_value,live_count"


def emit_results(metrics: StreamMetrics, stream, path, fmt: str = "csv") -> None:
    """Write one row per update; checkpoint fields are empty when absent.

    `path` may also be an open file-like object (anything with .write).
    """
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {fmt!r}")
    if hasattr(path, "write"):
        _write_rows(path, metrics, stream, fmt)
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    with fh:
        _write_rows(fh, metrics, stream, fmt)


def _write_rows(fh, metrics, stream, fmt):
    by_t = {cp.t: cp for cp in metrics.checkpoints}
    cum = 0
    if fmt == "csv":
        fh.write(CSV_HEADER + "\n")
    for ev, q in zip(stream, metrics.per_update_queries):
        cum += q
        cp = by_t.get(ev.t)
        if fmt == "csv":
            row = [str(ev.t), ev.kind, str(q), str(cum)]
            if cp is None:
                row += ["", "", "", ""]
            else:
                row += [_fmt(cp.solution_value), _fmt(cp.greedy_value),
                        _fmt(cp.opt_value), str(cp.live_count)]
            fh.write(",".join(row) + "\n")
        else:
            rec = {"t": ev.t, "kind": ev.kind, "queries": q, "cum_queries": cum,
                   "solution_value": None if cp is None else cp.solution_value,
                   "greedy_value": None if cp is None else cp.greedy_value,
                   "opt_value": None if cp is None else cp.opt_value,
                   "live_count": None if cp is None else cp.live_count}
            fh.write(json.dumps(rec) + "\n")
