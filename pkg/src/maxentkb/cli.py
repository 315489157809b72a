"""Command-line front end.

Subcommands: compile, query, sample, learn, export, serve.
Exit codes: 0 success/converged, 1 parse or input errors, 2 inconsistent
rules or infeasible hypotheticals, 3 sweep limit reached.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import archive
from .errors import InfeasibleHypotheticalsError, InfeasibleRuleError, KbError
from .hypertree import (
    dependency_graph,
    dependency_graph_document,
    export_graph,
    mixed_graph,
    mixed_graph_document,
    structure_graph_document,
)
from .learning import alpha_learn, draw_sample, sample_from_csv, sample_to_csv
from .maxent import SolveReport, factored_absolute_entropy, ledger_csv, ledger_json
from .parser import format_sentence
from .shell import CompiledKb, compile_kb, load_compiled, run_query_script

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INCONSISTENT = 2
EXIT_SWEEP_LIMIT = 3

_STATUS_EXIT = {
    "converged": EXIT_OK,
    "inconsistent": EXIT_INCONSISTENT,
    "sweep-limit": EXIT_SWEEP_LIMIT,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maxentkb",
        description=(
            "Probabilistic knowledge bases: compile rule files into "
            "maximum-entropy distributions, then query, sample, and learn."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--tolerance", type=float, default=None,
                       help="max residual for convergence (overrides KB option)")
        p.add_argument("--max-sweeps", type=int, default=None,
                       help="iteration cap (overrides KB option)")

    p = sub.add_parser("compile", help="compile a KB file into an archive")
    p.add_argument("kb", type=Path)
    p.add_argument("-o", "--output", type=Path, default=None,
                   help="archive path (default: <kb>.compiled.json)")
    solver_flags(p)
    p.add_argument("--heuristic", choices=("min_fill", "max_cardinality"), default=None)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("query", help="run assume/eval lines against an archive")
    p.add_argument("archive", type=Path)
    p.add_argument("--script", type=Path, default=None, help="query script file")
    p.add_argument("-e", "--eval", dest="inline", action="append", default=[],
                   metavar="LINE", help="inline script line (repeatable)")
    p.add_argument("--oracle", action="store_true",
                   help="recompute on the explicit joint and print the discrepancy")
    solver_flags(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("sample", help="draw rows from the compiled distribution")
    p.add_argument("archive", type=Path)
    p.add_argument("-n", type=int, default=1000, help="number of rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", type=Path, default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("learn", help="blend sample frequencies and re-solve")
    p.add_argument("archive", type=Path)
    p.add_argument("sample", type=Path, help="CSV file of complete realizations")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("-o", "--output", type=Path, required=True, help="new archive path")
    solver_flags(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("export", help="write graphs or the entropy ledger")
    p.add_argument("archive", type=Path)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--graph", choices=("dependency", "mixed", "structure"))
    group.add_argument("--ledger", choices=("csv", "json"))
    p.add_argument("--format", choices=("dot", "json"), default="json",
                   help="graph output format")
    p.add_argument("-o", "--output", type=Path, default=None, help="default stdout")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="serve the HTTP consultation API")
    p.add_argument("archive", type=Path)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8732)
    p.set_defaults(func=cmd_serve)

    return parser


def _print_report(report: SolveReport, compiled: CompiledKb | None = None) -> None:
    print(f"status: {report.status}")
    print(f"sweeps: {report.sweeps}")
    if report.message:
        print(f"note: {report.message}")
    if report.offenders:
        print("offending rules: " + ", ".join(report.offenders))
    if report.residuals:
        print("rules:")
        for r in report.residuals:
            achieved = "undefined" if r.achieved != r.achieved else f"{r.achieved:.6f}"
            print(
                f"  {r.rule_id}  target {r.target:.6f}  achieved {achieved}"
                f"  residual {r.residual:.3g}"
            )
    ledger = report.ledger
    print(f"uniform entropy:            {ledger.uniform_entropy_bits:.6f} bits")
    print(f"information gained:         {ledger.cumulative_bits:.6f} bits")
    print(
        "uniform minus gained:       "
        f"{ledger.uniform_entropy_bits - ledger.cumulative_bits:.6f} bits"
    )
    if compiled is not None:
        print(
            f"absolute entropy:           {factored_absolute_entropy(compiled.dist):.6f} bits"
        )


def cmd_compile(args) -> int:
    text = args.kb.read_text(encoding="utf-8")
    compiled = compile_kb(
        text,
        tolerance=args.tolerance,
        max_sweeps=args.max_sweeps,
        heuristic=args.heuristic,
    )
    output = args.output or args.kb.with_suffix(".compiled.json")
    output.write_text(compiled.archive_text(), encoding="utf-8")
    _print_report(compiled.report, compiled)
    print(f"archive: {output}")
    return _STATUS_EXIT[compiled.report.status]


def _load(path: Path, tolerance=None, max_sweeps=None) -> CompiledKb:
    compiled = load_compiled(path.read_text(encoding="utf-8"))
    overrides = {
        k: v
        for k, v in (("tolerance", tolerance), ("max_sweeps", max_sweeps))
        if v is not None
    }
    if overrides:
        compiled.source = replace(
            compiled.source, options=replace(compiled.source.options, **overrides)
        )
    return compiled


def cmd_query(args) -> int:
    compiled = _load(args.archive, args.tolerance, args.max_sweeps)
    if args.script is not None:
        script = args.script.read_text(encoding="utf-8")
    elif args.inline:
        script = "\n".join(args.inline)
    else:
        print("query: provide --script FILE or at least one -e LINE", file=sys.stderr)
        return EXIT_INPUT
    run = run_query_script(compiled, script, oracle=args.oracle)
    if run.result.report is not None:
        print(f"projection sweeps: {run.result.report.sweeps}")
    for imperative, value in zip(run.spec.imperatives, run.result.values):
        text = format_sentence(imperative.conclusion)
        if imperative.premise is not None:
            text += " | " + format_sentence(imperative.premise)
        if value.probability is None:
            print(f"P({text}) = undefined ({value.note})")
        else:
            print(f"P({text}) = {value.probability:.6f}")
    if run.oracle_discrepancy is not None:
        print(f"oracle max discrepancy: {run.oracle_discrepancy:.3g}")
    return EXIT_OK


def cmd_sample(args) -> int:
    compiled = _load(args.archive)
    sample = draw_sample(compiled.dist, args.n, args.seed)
    text = sample_to_csv(sample)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, encoding="utf-8")
        print(f"wrote {len(sample)} rows to {args.output}")
    return EXIT_OK


def cmd_learn(args) -> int:
    compiled = _load(args.archive, args.tolerance, args.max_sweeps)
    sample = sample_from_csv(
        args.sample.read_text(encoding="utf-8"), compiled.source.variables
    )
    outcome = alpha_learn(
        compiled.dist,
        sample,
        args.alpha,
        list(compiled.source.rules),
        list(compiled.rule_homes),
        tolerance=compiled.options.tolerance,
        max_sweeps=compiled.options.max_sweeps,
    )
    for warning in outcome.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    new_source = replace(compiled.source, rules=outcome.rules)
    # alpha 0 is the identity: nothing blends in and the confirmation solve
    # leaves the tables untouched, so keep the archived report instead of the
    # fresh zero-sweep one and the output archive stays byte-identical.
    report = compiled.report if args.alpha == 0.0 else outcome.report
    learned = CompiledKb(new_source, compiled.dist, outcome.homes, report)
    args.output.write_text(learned.archive_text(), encoding="utf-8")
    _print_report(outcome.report, learned)
    print(f"archive: {args.output}")
    return _STATUS_EXIT[outcome.report.status]


def cmd_export(args) -> int:
    compiled = _load(args.archive)
    if args.ledger is not None:
        text = (
            ledger_csv(compiled.report)
            if args.ledger == "csv"
            else ledger_json(compiled.report)
        )
    else:
        variables, rules = compiled.source.variables, compiled.source.rules
        if args.graph == "dependency":
            document = dependency_graph_document(dependency_graph(variables, rules))
        elif args.graph == "mixed":
            document = mixed_graph_document(mixed_graph(variables, rules))
        else:
            document = structure_graph_document(compiled.dist.tree)
        text = export_graph(document, args.format)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    compiled = _load(args.archive)
    uvicorn.run(create_app(compiled), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleHypotheticalsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except InfeasibleRuleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except KbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
