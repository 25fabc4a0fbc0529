"""Command-line entry point: ``mivar validate|solve|generate|bench|export-dot``.

Exit codes:

    0  success
    2  usage error (bad flags, malformed or overlapping query, unknown ids)
    3  unreadable file, XML/TSV parse or schema error, invalid net
    4  missing data: some required parameter cannot be derived
    5  numeric evaluation error
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from . import genbench, kbio
from .errors import (
    EvalError,
    InsufficientData,
    KbError,
    MissingData,
    NetError,
    QueryError,
    TraceTooLarge,
)
from .inference import Query, TieBreak, prune_path, run_inference, solve
from .net import validate_net
from .trace import render_trace, trace_matrix

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_MISSING = 4
EXIT_EVAL = 5

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class UsageError(Exception):
    pass


def _split(values: list[str] | None) -> list[str]:
    out = []
    for v in values or []:
        out.extend(part.strip() for part in v.split(",") if part.strip())
    return out


def parse_given(values: list[str] | None) -> dict[str, float]:
    given = {}
    for item in _split(values):
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or not _IDENT.match(name):
            raise UsageError(f"--given expects id=value, got {item!r}")
        try:
            given[name] = float(value)
        except ValueError:
            raise UsageError(f"--given value for {name} is not a number: {value!r}") from None
    return given


def parse_find(values: list[str] | None) -> list[str]:
    ids = _split(values)
    for ident in ids:
        if not _IDENT.match(ident):
            raise UsageError(f"--find expects parameter ids, got {ident!r}")
    return ids


def parse_size(text: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a size: {text!r}") from None
    if value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer size: {text!r}")
    return int(value)


def parse_sizes(text: str) -> list[int]:
    return [parse_size(part) for part in text.split(",") if part.strip()]


def _fmt(value: float) -> str:
    return format(value, ".15g")


def _load(args):
    return kbio.load_net(args.kb, args.format)


def _query(args, net) -> Query:
    query = Query(parse_given(args.given), frozenset(parse_find(args.find)))
    query.check(net)
    return query


def cmd_validate(args) -> int:
    net, meta = _load(args)
    problems = [str(v) for v in validate_net(net)] + meta.check(net)
    status = "OK" if not problems else f"{len(problems)} violation(s)"
    print(f"n={net.n}, m={net.m}, {status}")
    for p in problems:
        print(f"  {p}")
    return EXIT_OK if not problems else EXIT_INPUT


def cmd_solve(args) -> int:
    net, _ = _load(args)
    query = _query(args, net)
    policy = TieBreak(args.policy)

    if args.trace:
        print(render_trace(trace_matrix(net, query, policy, restrict=args.restrict)), end="")

    try:
        result = solve(net, query, policy, restrict=args.restrict, evaluate=not args.no_eval)
    except MissingData as e:
        print("missing data")
        print("unreached: " + ", ".join(sorted(e.unreached_targets, key=net.param_index)))
        if e.frontier:
            print("blocked rules: " + ", ".join(sorted(e.frontier, key=net.rule_index)))
        return EXIT_MISSING

    print("path: " + (", ".join(result.path.ids) or "(empty)"))
    for ident, value in result.bindings.items():
        if ident not in query.given and value is not None:
            print(f"{ident} = {_fmt(value)}")
    s = result.stats
    print(f"stats: known_marks={s.known_marks} rule_marks={s.rule_marks} counter_decrements={s.counter_decrements}")
    if args.dot:
        Path(args.dot).write_text(kbio.export_dot(net, result.path, query), encoding="utf-8")
    return EXIT_OK


def cmd_export_dot(args) -> int:
    net, _ = _load(args)
    query = _query(args, net)
    try:
        raw = run_inference(net, query, TieBreak(args.policy))
    except MissingData as e:
        print("unreached: " + ", ".join(sorted(e.unreached_targets, key=net.param_index)), file=sys.stderr)
        return EXIT_MISSING
    dot = kbio.export_dot(net, prune_path(net, raw, query), query)
    if args.output and args.output != "-":
        Path(args.output).write_text(dot, encoding="utf-8")
    else:
        sys.stdout.write(dot)
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = genbench.GenSpec(
        args.n,
        include_inverses=not args.no_inverses,
        bounded_values=args.bounded_values,
    )
    net = genbench.generate_chain(spec)
    if args.output:
        kbio.save_net(net, args.output, args.format)
    print(f"objects: {net.n}")
    print(f"rules: {net.m}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.self_test:
        records = genbench.canned_linear_records()
    else:
        sizes = args.sizes or [10**4, 10**5, 10**6]

        def report(rec):
            print(f"n={rec.n_objects} rules={rec.n_rules} median_ms={rec.solve_ms:.3f} path_len={rec.path_length}")

        records = genbench.run_benchmark(
            sizes, args.repeats, bounded_values=args.bounded_values, progress=report
        )
    if args.output == "-":
        genbench.write_bench_csv(records, sys.stdout)
    elif args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            genbench.write_bench_csv(records, fh)
    try:
        fit = genbench.fit_scaling(records)
    except InsufficientData as e:
        print(f"slope: insufficient data ({e})")
    else:
        print(f"slope={fit.slope:.4f} r2={fit.r2:.4f}")
    return EXIT_OK


def _add_query_flags(p):
    p.add_argument("kb", help="knowledge base (.xml or .tsv)")
    p.add_argument("--given", action="append", metavar="ID=VALUE[,...]", help="known parameters")
    p.add_argument("--find", action="append", metavar="ID[,...]", help="required parameters")
    p.add_argument("--policy", choices=[t.value for t in TieBreak], default=TieBreak.FIFO.value)
    p.add_argument("--format", choices=["xml", "tsv"], default=None, help="input format (default: by extension)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mivar", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load a knowledge base and check its invariants")
    p.add_argument("kb")
    p.add_argument("--format", choices=["xml", "tsv"], default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="construct and execute the algorithm for a query")
    _add_query_flags(p)
    p.add_argument("--restrict", action="store_true", help="only fire rules relevant to the targets")
    p.add_argument("--no-eval", action="store_true", help="construct the path without computing values")
    p.add_argument("--dot", metavar="PATH", help="write the solution graph as DOT")
    p.add_argument("--trace", action="store_true", help="print the matrix snapshots (small nets only)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("export-dot", help="write the solution graph for a query as DOT")
    _add_query_flags(p)
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.set_defaults(func=cmd_export_dot)

    p = sub.add_parser("generate", help="generate a chain net")
    p.add_argument("n", type=parse_size, help="number of objects (>= 3)")
    p.add_argument("-o", "--output", help="write the net to this file")
    p.add_argument("--format", choices=["xml", "tsv"], default=None, help="output format (default: by extension)")
    p.add_argument("--no-inverses", action="store_true", help="emit only c = a + b per triple")
    p.add_argument("--bounded-values", action="store_true", help="use c = (a + b) / 2 so values stay finite")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="time path construction on chain nets and fit the scaling exponent")
    p.add_argument("--sizes", type=parse_sizes, help="comma-separated object counts, e.g. 1e4,1e5,1e6")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("-o", "--output", default="bench.csv", help="CSV output ('-' for stdout)")
    p.add_argument("--bounded-values", action="store_true")
    p.add_argument("--self-test", action="store_true", help="fit canned linear timings instead of measuring")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, QueryError, TraceTooLarge) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        if isinstance(e, (KbError, NetError)):
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INPUT
        if args.command in ("generate", "bench"):
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        raise
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except EvalError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
