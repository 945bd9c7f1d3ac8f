"""Fully dynamic monotone submodular maximization under a cardinality constraint.

Maintains a constant-factor approximate solution across a stream of element
insertions and deletions using amortized polylogarithmic oracle queries,
with offline baselines and a benchmark harness.
"""

from ._backend import HAVE_COMPILED, default_backend
from .baselines import BaselineResult, brute_force_opt, offline_greedy
from .dyncore import Params, RunState, calc_sample_count, check_suitable, filter_survivors, tail_hit_rate
from .errors import (
    DuplicateElementError,
    DynSubmaxError,
    InstanceTooLargeError,
    InvariantViolation,
    UnknownElementError,
)
from .harness import StreamSpec, emit_results, generate_stream, run_experiment
from .oracle import CountingOracle, CoverageFunction, ModularFunction, load_coverage, save_coverage
from .runs import ParallelRuns, run_index_range

__version__ = "0.1.0"

__all__ = [
    "BaselineResult",
    "CountingOracle",
    "CoverageFunction",
    "DuplicateElementError",
    "DynSubmaxError",
    "HAVE_COMPILED",
    "InstanceTooLargeError",
    "InvariantViolation",
    "ModularFunction",
    "ParallelRuns",
    "Params",
    "RunState",
    "StreamSpec",
    "UnknownElementError",
    "brute_force_opt",
    "calc_sample_count",
    "check_suitable",
    "default_backend",
    "emit_results",
    "filter_survivors",
    "generate_stream",
    "load_coverage",
    "offline_greedy",
    "run_experiment",
    "run_index_range",
    "save_coverage",
    "tail_hit_rate",
]
