"""Command line interface: ``simplex-hh {integrate,bounds,verify,partitions}``.

Exit codes: 0 success, 1 an inequality chain failed, 2 bad input,
3 degenerate geometry.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Sequence

from .bounds import full_report, parse_partition_spec
from .errors import DegenerateSimplex, SimplexHHError
from .functions import convexity_sample_check, function_from_dict
from .integrate import Method, avg
from .partitions import (
    Partition,
    enumerate_partitions,
    equal_block_partitions,
    group_splits,
    refines,
    sample_partitions,
)
from .simplex import simplex_from_dict
from .verify import run_campaign

EXIT_OK, EXIT_CHAIN_FAILURE, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3


class InputError(Exception):
    pass


def _dump(data: Any) -> str:
    # float repr is the shortest round-trip form, so output is reproducible byte for byte
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False)


def _load_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load_inputs(args):
    s = simplex_from_dict(_load_json(args.simplex))
    f = function_from_dict(_load_json(args.function))
    if f.dim != s.ambient_dim:
        raise InputError(f"function dim {f.dim} does not match simplex dimension {s.ambient_dim}")
    return s, f


def cmd_integrate(args) -> int:
    s, f = _load_inputs(args)
    params: dict[str, Any] = {}
    method = Method(args.method)
    if method is Method.QUADRATURE and args.degree is not None:
        params["degree"] = args.degree
    if method is Method.MONTE_CARLO:
        params.update(n_samples=args.samples, seed=args.seed, threads=args.threads)
    result = avg(s, f, method, **params).to_dict()
    result["seed"] = args.seed
    if args.format == "text":
        print(f"{result['value']!r} ({result['method']}, error estimate {result['error_estimate']!r})")
    else:
        print(_dump(result))
    return EXIT_OK


def cmd_bounds(args) -> int:
    s, f = _load_inputs(args)
    if not f.convexity_certified and not args.allow_nonconvex:
        check = convexity_sample_check(f, s, 1000, args.seed)
        if not check:
            raise InputError(f"function failed the sampled convexity check (witness {check.witness}); "
                             "pass --allow-nonconvex to evaluate anyway")
    try:
        parts = parse_partition_spec(args.partitions, s.intrinsic_dim)
    except ValueError as exc:
        raise InputError(f"bad --partitions: {exc}") from exc
    report = full_report(s, f, parts, seed=args.seed, threads=args.threads)
    if args.format == "csv":
        sys.stdout.write(report.to_csv())
    elif args.format == "text":
        sys.stdout.write(report.to_text())
    else:
        data = report.to_dict()
        data["seed"] = args.seed
        print(_dump(data))
    if report.errors:
        for e in report.errors:
            print(f"error: {e}", file=sys.stderr)
    if not report.all_passed:
        for c in report.failures:
            print(f"chain failed: {c.relation} (slack {c.slack!r})", file=sys.stderr)
        return EXIT_CHAIN_FAILURE
    return EXIT_OK


def cmd_verify(args) -> int:
    summary = run_campaign(args.n, args.trials, args.seed, args.inject_nonconvex, args.threads)
    if args.format == "text":
        print(f"n={summary['n']} trials={summary['trials']} seed={summary['seed']} "
              f"mode={summary['mode']} pairs={summary['pairs']}")
        print(f"checked {summary['checked']}, passed {summary['passed']}, failed {summary['failed']}, "
              f"max negative margin {summary['max_negative_margin']!r}")
        for fail in summary["failures"]:
            print(f"  trial {fail['trial']} {fail['function']}: {fail['relation']} slack {fail['slack']!r}")
    else:
        print(_dump(summary))
    return EXIT_OK if summary["failed"] == 0 else EXIT_CHAIN_FAILURE


def _parse_partition(text: str, n: int | None) -> Partition:
    try:
        return Partition.parse(text, None if n is None else n + 1)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_partitions(args) -> int:
    if args.refines:
        a, b = (_parse_partition(t, args.n) for t in args.refines)
        try:
            print("true" if refines(a, b) else "false")
        except SimplexHHError as exc:
            raise InputError(str(exc)) from exc
        return EXIT_OK
    if args.n is None:
        raise InputError("--n is required unless --refines is given")
    if args.equal_blocks is not None:
        parts = equal_block_partitions(args.n, args.equal_blocks)
    elif args.group_splits is not None:
        parts = group_splits(args.n, args.group_splits)
    elif args.sample is not None:
        parts = sample_partitions(args.n, args.sample, args.seed)
    else:
        parts = enumerate_partitions(args.n)
    for p in parts:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simplex-hh", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("json", "text")):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: $SIMPLEX_HH_THREADS or 1)")
        p.add_argument("--format", choices=formats, default="json")

    p = sub.add_parser("integrate", help="average of a function over a simplex")
    p.add_argument("--simplex", required=True)
    p.add_argument("--function", required=True)
    p.add_argument("--method", choices=[m.value for m in Method], default="exact")
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--samples", type=int, default=100_000)
    common(p)
    p.set_defaults(run=cmd_integrate)

    p = sub.add_parser("bounds", help="all bounds and inequality chains for one instance")
    p.add_argument("--simplex", required=True)
    p.add_argument("--function", required=True)
    p.add_argument("--partitions", action="append", default=None,
                   help="all | singletons | trivial | divisor=D | explicit like 0,1|2 (';'-separated or repeated)")
    p.add_argument("--allow-nonconvex", action="store_true")
    common(p, ("json", "csv", "text"))
    p.set_defaults(run=cmd_bounds)

    p = sub.add_parser("verify", help="randomised campaign over every inequality")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--inject-nonconvex", action="store_true", help="add -||x||^2 as a negative control")
    common(p)
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("partitions", help="list partitions of {0..n} or test refinement")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--refines", nargs=2, metavar=("FINE", "COARSE"))
    g = p.add_mutually_exclusive_group()
    g.add_argument("--equal-blocks", type=int, metavar="D")
    g.add_argument("--group-splits", type=int, metavar="K")
    g.add_argument("--sample", type=int, metavar="COUNT")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=cmd_partitions)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify" and (args.n < 1 or args.trials < 1):
        print("error: verify needs --n >= 1 and --trials >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.run(args)
    except DegenerateSimplex as exc:
        print(f"error: degenerate simplex: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, SimplexHHError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
