"""Command-line interface.

Subcommands: ``detect``, ``detect-multi``, ``simulate``, ``returns`` and
``bench``. Exit status is 0 whenever the run completes, whether or not a
change is found, and 2 on any operational failure.
"""

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .bench import BIN_LABELS, run_multi, run_single, success_curve
from .datagen import EXAMPLES, ScenarioSpec, make_scenario
from .distances import DEFAULT_EXP_SCALE, KINDS, METHOD_NAMES, make_spec
from .ingest import load_matrix_csv, load_price_csv, prices_to_returns, write_matrix_csv
from .multi import DEFAULT_MIN_SEG, MultiConfig, detect_multiple_from_matrix
from .permutation import DEFAULT_ALPHA, DEFAULT_B, PermutationConfig, permutation_test
from .report import curve_rows, dumps, multi_report, single_report, write_rows, write_text
from .scan import CandidateSet, pairwise_matrix, scan


_CP = {"type": "object", "required": ["location", "p_value", "depth"],
       "properties": {"location": {"type": "integer", "minimum": 1},
                      "p_value": {"type": "number", "minimum": 0, "maximum": 1},
                      "depth": {"type": "integer", "minimum": 0}}}

# JSON schema for detect and detect-multi reports; shipped as docs/report.schema.json
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "distcp detection report",
    "type": "object",
    "required": ["method", "distance", "n", "d", "delta", "t_hat", "s_hat", "p_value",
                 "reject", "change_points", "seed", "B", "alpha", "elapsed_ms"],
    "properties": {
        "method": {"enum": ["single", "multi"]},
        "distance": {"type": "object", "required": ["kind"],
                     "properties": {"kind": {"enum": list(KINDS)},
                                    "exp_scale": {"type": "number", "exclusiveMinimum": 0},
                                    "block_sizes": {"type": "array",
                                                    "items": {"type": "integer", "minimum": 1}}}},
        "n": {"type": "integer", "minimum": 2},
        "d": {"type": "integer", "minimum": 1},
        "delta": {"type": ["number", "null"]},
        "t_min": {"type": "integer"},
        "t_max": {"type": "integer"},
        "t_hat": {"type": ["integer", "null"]},
        "s_hat": {"type": ["number", "null"]},
        "p_value": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "reject": {"type": "boolean"},
        "cutoff": {"type": ["number", "null"]},
        "change_points": {"type": "array", "items": _CP},
        "segments": {"type": "array",
                     "items": {"type": "array", "items": {"type": "integer"},
                               "minItems": 2, "maxItems": 2}},
        "splits": {"type": "array", "items": {"type": "object"}},
        "min_seg": {"type": "integer", "minimum": 2},
        "max_depth": {"type": ["integer", "null"]},
        "seed": {"type": "integer"},
        "B": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "source": {"type": ["object", "null"]},
        "elapsed_ms": {"type": ["number", "null"]},
    },
}


class StageError(Exception):
    def __init__(self, stage, err):
        super().__init__(f"{stage}: {err}")
        self.stage = stage


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (ValueError, OSError, KeyError)):
            raise StageError(self.name, exc) from exc
        return False


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _block_arg(text):
    sizes = _int_list(text)
    return sizes[0] if len(sizes) == 1 else sizes


def _add_distance(p):
    p.add_argument("--distance", choices=KINDS, default="l2")
    p.add_argument("--exp-scale", type=float, default=DEFAULT_EXP_SCALE,
                   help="lambda in psi(t) = 1 - exp(-t/lambda) (default %(default)s)")
    p.add_argument("--block-sizes", type=_block_arg, default=None,
                   help="comma-separated block sizes, or one size for uniform blocks")


def _add_input(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="numeric CSV, one observation per row ('-' for stdin)")
    src.add_argument("--example", type=int, choices=sorted(EXAMPLES),
                     help="simulate a registered example instead of reading a file")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--tau", type=_int_list, help="true change-point(s) for --example")
    p.add_argument("--beta", type=float)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="record elapsed_ms in the report (otherwise null, keeping output reproducible)")


def _load(args):
    with _Stage("load"):
        if args.input is not None:
            return load_matrix_csv(args.input), {"input": args.input}
        spec = ScenarioSpec(args.example, args.n, args.d, args.tau, args.beta, args.seed)
        sc = make_scenario(spec)
        return sc.data, {"example": sc.metadata()}


def _spec(args, d):
    with _Stage("validate"):
        spec = make_spec(args.distance, args.exp_scale, args.block_sizes, d)
        spec.validate(d)
        return spec


def cmd_detect(args, stdout):
    start = time.perf_counter()
    x, source = _load(args)
    n, d = x.shape
    spec = _spec(args, d)
    with _Stage("validate"):
        cand = CandidateSet.for_n(n, args.delta, args.delta_rule)
        cfg = PermutationConfig(args.permutations, args.alpha, args.seed)
    with _Stage("distance"):
        D = pairwise_matrix(x, spec, threads=args.threads)
    with _Stage("scan"):
        result = scan(D, cand)
    with _Stage("test"):
        outcome = permutation_test(D, cand, cfg, threads=args.threads, s_obs=result.s_hat)
    elapsed = (time.perf_counter() - start) * 1e3 if args.timing else None
    rep = single_report(spec=spec, n=n, d=d, cand=cand, result=result, outcome=outcome,
                        cfg=cfg, elapsed_ms=elapsed, source=source)
    with _Stage("write"):
        if args.curve_out:
            write_rows(args.curve_out, ["t", "value"], curve_rows(result))
        if args.dump_replicates:
            write_rows(args.dump_replicates, ["replicate", "statistic"],
                       [(b, repr(float(v))) for b, v in enumerate(outcome.replicates)])
        write_text(dumps(rep), args.out, stdout)
    return rep


def cmd_detect_multi(args, stdout):
    start = time.perf_counter()
    x, source = _load(args)
    n, d = x.shape
    spec = _spec(args, d)
    with _Stage("validate"):
        cfg = MultiConfig(args.min_seg, args.permutations, args.alpha, args.seed, args.max_depth)
    with _Stage("distance"):
        D = pairwise_matrix(x, spec, threads=args.threads)
    with _Stage("test"):
        report = detect_multiple_from_matrix(D, cfg, threads=args.threads)
    elapsed = (time.perf_counter() - start) * 1e3 if args.timing else None
    rep = multi_report(spec=spec, d=d, report=report, elapsed_ms=elapsed, source=source)
    with _Stage("write"):
        if args.csv_out:
            write_rows(args.csv_out, ["location", "p_value", "depth"],
                       [(c.location, repr(c.p_value), c.depth) for c in report.change_points])
        write_text(dumps(rep), args.out, stdout)
    return rep


def cmd_simulate(args, stdout):
    with _Stage("simulate"):
        sc = make_scenario(ScenarioSpec(args.example, args.n, args.d, args.tau, args.beta, args.seed))
    with _Stage("write"):
        if args.out in (None, "-"):
            write_matrix_csv(sc.data, stdout)
        else:
            write_matrix_csv(sc.data, args.out)
        meta = args.meta or (args.out + ".json" if args.out not in (None, "-") else None)
        if meta:
            write_text(dumps(sc.metadata()), meta, stdout)
    return sc


def cmd_returns(args, stdout):
    with _Stage("load"):
        table = load_price_csv(args.input)
    with _Stage("returns"):
        returns, kept, dropped = prices_to_returns(table, drop_incomplete=not args.keep_incomplete)
    with _Stage("write"):
        if args.out in (None, "-"):
            write_matrix_csv(returns, stdout)
        else:
            write_matrix_csv(returns, args.out)
        if dropped:
            target = args.dropped_out or (args.out + ".dropped.txt" if args.out not in (None, "-") else None)
            if target:
                write_text("".join(a + "\n" for a in dropped), target, stdout)
            print(f"dropped {len(dropped)} asset(s) with missing prices", file=sys.stderr)
    return returns, kept, dropped


def cmd_bench(args, stdout):
    kinds = [k.strip() for k in args.methods.split(",") if k.strip()]
    with _Stage("validate"):
        for k in kinds:
            if k not in KINDS:
                raise ValueError(f"unknown method {k!r}")
        ex = EXAMPLES[args.example]
    common = dict(kinds=kinds, reps=args.reps, seed=args.seed, B=args.permutations,
                  alpha=args.alpha, exp_scale=args.exp_scale, block_sizes=args.block_sizes,
                  threads=args.threads)
    summary = {"example": args.example, "reps": args.reps, "seed": args.seed,
               "B": args.permutations, "alpha": args.alpha, "methods": kinds}
    rows = []
    with _Stage("bench"):
        if args.d_grid:
            curves = success_curve(args.example, args.d_grid, beta=args.beta, n=args.n,
                                   tolerance=args.tolerance, rule=args.delta_rule,
                                   delta=args.delta, **common)
            summary.update(kind="success_curve", d=args.d_grid, beta=args.beta,
                           tolerance=args.tolerance, success=curves)
            header = ["method", "d", "success_rate"]
            rows = [(METHOD_NAMES[k], d, repr(v)) for k in kinds for d, v in zip(args.d_grid, curves[k])]
        elif len(ex.segments) > 2 or (args.tau and len(args.tau) > 1):
            bench = run_multi(args.example, tau=args.tau, n=args.n, d=args.d,
                              min_seg=args.min_seg, **common)
            rates = {k: bench.hit_rate(k, args.tolerance or 1) for k in kinds}
            summary.update(kind="multi", change_points=list(bench.change_points),
                           tolerance=args.tolerance or 1,
                           hit_rate={k: {str(t): v for t, v in r.items()} for k, r in rates.items()},
                           count_distribution={k: bench.count_distribution(k) for k in kinds})
            header = ["method", "tau", "hit_rate"]
            rows = [(METHOD_NAMES[k], t, repr(v)) for k in kinds for t, v in rates[k].items()]
        else:
            bench = run_single(args.example, tau=args.tau, n=args.n, d=args.d, beta=args.beta,
                               delta=args.delta, rule=args.delta_rule, **common)
            table = bench.table()
            summary.update(kind="table", tau=bench.tau, n=bench.n, d=bench.d, table=table,
                           exact_rate={k: bench.exact_rate(k) for k in kinds},
                           detection_rate={k: bench.detection_rate(k) for k in kinds})
            header = ["method"] + list(BIN_LABELS) + ["total"]
            rows = [[METHOD_NAMES[k]] + [table[k]["bins"][b] for b in BIN_LABELS] + [table[k]["total"]]
                    for k in kinds]
    with _Stage("write"):
        if args.out:
            write_rows(args.out + ".csv", header, rows)
            write_text(dumps(summary), args.out + ".json", stdout)
        else:
            stdout.write(",".join(map(str, header)) + "\n")
            for r in rows:
                stdout.write(",".join(map(str, r)) + "\n")
    return summary


def build_parser():
    parser = argparse.ArgumentParser(prog="distcp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="single change-point scan with a permutation test")
    _add_input(p)
    _add_distance(p)
    _add_common(p)
    p.add_argument("--delta", type=float, help="edge fraction excluded from the scan")
    p.add_argument("--delta-rule", choices=("fixed", "sqrt"), default="fixed")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--permutations", type=int, default=DEFAULT_B)
    p.add_argument("--out", help="JSON report path (default stdout)")
    p.add_argument("--curve-out", help="write the scan curve as CSV")
    p.add_argument("--dump-replicates", help="write permutation replicates as CSV")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("detect-multi", help="hierarchical multiple change-point detection")
    _add_input(p)
    _add_distance(p)
    _add_common(p)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--permutations", type=int, default=DEFAULT_B)
    p.add_argument("--min-seg", type=int, default=DEFAULT_MIN_SEG)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--out", help="JSON report path (default stdout)")
    p.add_argument("--csv-out", help="write change-points as CSV (location, p_value, depth)")
    p.set_defaults(func=cmd_detect_multi)

    p = sub.add_parser("simulate", help="generate a registered example as CSV")
    p.add_argument("--example", type=int, required=True, choices=sorted(EXAMPLES))
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--tau", type=_int_list)
    p.add_argument("--beta", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--meta", help="JSON sidecar with the true change-points")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("returns", help="convert a price table to period returns")
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="returns CSV path (default stdout)")
    p.add_argument("--keep-incomplete", action="store_true",
                   help="fail on missing prices instead of dropping the asset")
    p.add_argument("--dropped-out", help="text file listing dropped assets")
    p.set_defaults(func=cmd_returns)

    p = sub.add_parser("bench", help="replicated simulation study")
    p.add_argument("--example", type=int, required=True, choices=sorted(EXAMPLES))
    p.add_argument("--methods", default="l2,l1,exp")
    p.add_argument("--exp-scale", type=float, default=DEFAULT_EXP_SCALE)
    p.add_argument("--block-sizes", type=_block_arg, default=None)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--tau", type=_int_list)
    p.add_argument("--beta", type=float)
    p.add_argument("--d-grid", type=_int_list, help="dimensions for a success-rate curve")
    p.add_argument("--tolerance", type=int, default=0,
                   help="allowed |t_hat - tau| for success (multi default 1)")
    p.add_argument("--delta", type=float)
    p.add_argument("--delta-rule", choices=("fixed", "sqrt"), default="fixed")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--permutations", type=int, default=DEFAULT_B)
    p.add_argument("--min-seg", type=int, default=DEFAULT_MIN_SEG)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="output prefix; writes PREFIX.csv and PREFIX.json")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("schema", help="print the JSON schema of detection reports")
    p.set_defaults(func=lambda args, stdout: stdout.write(dumps(REPORT_SCHEMA)))
    return parser


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        args.func(args, stdout)
    except StageError as e:
        print(f"error [{e}]", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
