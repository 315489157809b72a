"""Top-level operations tying parsing, structure, and solving together.

``compile_kb`` takes knowledge-base text to a solved factored
distribution plus its report; ``run_query_script`` executes assume/eval
scripts against a compiled base, optionally cross-checking every answer
on the materialized explicit joint.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import archive
from .engine import FactoredDistribution, oracle_project
from .errors import InfeasibleHypotheticalsError
from .hypertree import build_from_rules
from .maxent import SolveReport, solve
from .model import conditional_probability, sentence_probability
from .parser import KnowledgeBaseSource, SolverOptions, parse_kb
from .query import QueryResult, QuerySpec, complex_query, parse_query_script


@dataclass
class CompiledKb:
    source: KnowledgeBaseSource
    dist: FactoredDistribution
    rule_homes: tuple[int, ...]
    report: SolveReport

    @property
    def options(self) -> SolverOptions:
        return self.source.options

    @property
    def schema(self) -> dict:
        return {v.name: v for v in self.source.variables}

    def archive_text(self) -> str:
        return archive.dumps(
            archive.archive_document(self.source, self.dist, self.rule_homes, self.report)
        )


def compile_kb(
    text: str,
    tolerance: float | None = None,
    max_sweeps: int | None = None,
    heuristic: str | None = None,
) -> CompiledKb:
    """Parse, build the hypertree, and solve from the uniform start.

    Explicit arguments override the KB file's option lines. The result
    carries the report whatever its status; callers decide whether an
    inconsistent or sweep-limited state is acceptable.
    """
    source = parse_kb(text)
    overrides = {
        key: value
        for key, value in (
            ("tolerance", tolerance),
            ("max_sweeps", max_sweeps),
            ("heuristic", heuristic),
        )
        if value is not None
    }
    if overrides:
        source = replace(source, options=replace(source.options, **overrides))

    tree = build_from_rules(source.variables, source.rules, source.options.heuristic)
    rule_homes = tuple(tree.cluster_homes[: len(source.rules)])
    dist = FactoredDistribution.init_uniform(tree, source.variables)
    report = solve(
        dist,
        list(source.rules),
        list(rule_homes),
        tolerance=source.options.tolerance,
        max_sweeps=source.options.max_sweeps,
    )
    return CompiledKb(source, dist, rule_homes, report)


def load_compiled(text: str) -> CompiledKb:
    source, dist, rule_homes, report = archive.loads(text)
    return CompiledKb(source, dist, rule_homes, report)


@dataclass
class QueryRun:
    spec: QuerySpec
    result: QueryResult
    oracle_discrepancy: float | None = None  # max |factored - explicit| over answers


def run_query_script(
    compiled: CompiledKb, script: str, oracle: bool = False
) -> QueryRun:
    """Execute a query script; with oracle=True recompute on the explicit joint."""
    spec = parse_query_script(script, compiled.schema)
    result = complex_query(
        compiled.dist,
        spec,
        tolerance=compiled.options.tolerance,
        max_sweeps=compiled.options.max_sweeps,
    )
    run = QueryRun(spec, result)
    if oracle:
        run.oracle_discrepancy = _oracle_discrepancy(compiled, spec, result)
    return run


def _oracle_discrepancy(
    compiled: CompiledKb, spec: QuerySpec, result: QueryResult
) -> float:
    """Replay the whole query on the explicit joint and compare answers."""
    joint = compiled.dist.to_explicit_joint()
    if spec.hypotheticals:
        joint, report = oracle_project(
            joint,
            list(spec.hypotheticals),
            tolerance=compiled.options.tolerance,
            max_sweeps=compiled.options.max_sweeps,
        )
        if report.status != "converged":
            raise InfeasibleHypotheticalsError(
                "explicit-joint replay did not converge", report=report
            )
    worst = 0.0
    for imperative, answer in zip(spec.imperatives, result.values):
        if answer.probability is None:
            continue
        if imperative.premise is None:
            reference = sentence_probability(joint, imperative.conclusion)
        else:
            reference = conditional_probability(
                joint, imperative.conclusion, imperative.premise
            )
        worst = max(worst, abs(answer.probability - reference))
    return worst
