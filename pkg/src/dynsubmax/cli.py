"""Command-line experiment driver.

Example:
    dynsubmax --instance inst.txt --k 5 --eps 0.05 --mode parallel \
        --stream insert-then-delete:0.5 --n 30 --seed 1 --out run.csv
"""

from __future__ import annotations

import argparse
import sys

from .dyncore import Params
from .errors import DynSubmaxError, InvariantViolation
from .harness import StreamSpec, emit_results, generate_stream, run_experiment
from .oracle import load_coverage

_STREAM_ALIASES = {
    "insert-then-delete": "insert_then_delete",
    "window": "sliding_window",
    "interleaved": "interleaved",
}


def _parse_mode(text: str):
    if text == "parallel":
        return "parallel"
    if text.startswith("known-opt:"):
        value = float(text.split(":", 1)[1])
        if value <= 0:
            raise argparse.ArgumentTypeError("known-opt value must be positive")
        return value
    raise argparse.ArgumentTypeError(f"mode must be 'parallel' or 'known-opt:<v>', got {text!r}")


def _parse_stream(text: str):
    name, _, arg = text.partition(":")
    if name not in _STREAM_ALIASES:
        raise argparse.ArgumentTypeError(
            f"stream must be one of insert-then-delete:<frac>, window:<w>, interleaved:<p>; got {text!r}")
    if not arg:
        raise argparse.ArgumentTypeError(f"stream {name!r} needs a parameter, e.g. {name}:0.5")
    return _STREAM_ALIASES[name], float(arg)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dynsubmax",
        description="Replay an update stream through the dynamic maximizer and emit metrics.")
    p.add_argument("--instance", required=True, help="coverage instance file (one element per line)")
    p.add_argument("--k", type=int, required=True, help="cardinality constraint")
    p.add_argument("--eps", type=float, default=0.05, help="accuracy parameter (0, 0.1)")
    p.add_argument("--mode", type=_parse_mode, default="parallel",
                   help="known-opt:<v> for a single run, or parallel (default)")
    p.add_argument("--stream", type=_parse_stream, default=("insert_then_delete", 0.5),
                   help="insert-then-delete:<frac> | window:<w> | interleaved:<p>")
    p.add_argument("--n", type=int, default=None,
                   help="number of elements to stream (default: whole instance)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trial-factor", type=float, default=1.0,
                   help="scales the threshold-sampling trial count (1.0 = full formula)")
    p.add_argument("--checkpoint-every", type=int, default=0,
                   help="record a quality checkpoint every N updates (0: final only)")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--check-invariants", action="store_true",
                   help="run the full structural invariant suite after every update")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        instance = load_coverage(args.instance)
        n = args.n if args.n is not None else len(instance)
        mode_name, mode_param = args.stream
        spec = StreamSpec(mode=mode_name, n=n, param=mode_param, seed=args.seed)
        stream = generate_stream(spec, instance)
        params = Params(k=args.k, eps=args.eps, trial_factor=args.trial_factor,
                        rng_seed=args.seed)
        metrics = run_experiment(
            stream, instance, params, mode=args.mode,
            checkpoint_every=args.checkpoint_every,
            check_invariants=args.check_invariants)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 1
    except (DynSubmaxError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.out == "-":
        emit_results(metrics, stream, sys.stdout, fmt=args.format)
    else:
        emit_results(metrics, stream, args.out, fmt=args.format)
    total = metrics.cumulative_queries
    n_up = max(1, len(metrics.per_update_queries))
    print(f"updates={len(metrics.per_update_queries)} queries={total} "
          f"amortized={total / n_up:.2f} instrumentation={metrics.instrumentation_queries}",
          file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
