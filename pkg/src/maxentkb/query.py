"""Questions against a compiled knowledge base, never mutating it.

Two kinds, both answered on a copy of the factored distribution:

* simple: instantiate evidence ``variable = value`` (probability-1
  conditioning) and read back all marginals;
* complex: impose temporary hypothetical facts/rules, project the
  current distribution onto them by the same minimum-relative-entropy
  machinery used at compile time, evaluate imperative expressions under
  the result, then discard it.

Query scripts are plain text: ``assume`` lines carry hypotheticals in
rule syntax, ``eval C`` or ``eval C | P`` lines are imperatives. The
bar in an eval line separates conclusion from premise; a top-level
disjunction must be parenthesized to avoid the ambiguity.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import FactoredDistribution
from .errors import (
    ImpossibleEvidenceError,
    InfeasibleHypotheticalsError,
    ParseError,
    SchemaError,
)
from .maxent import SolveReport, solve
from .model import Atom, Comparator, Rule, Sentence, Variable, sentence_mask
from .parser import parse_fact, parse_rule


@dataclass(frozen=True)
class Imperative:
    conclusion: Sentence
    premise: Sentence | None = None


@dataclass(frozen=True)
class QuerySpec:
    hypotheticals: tuple[Rule, ...]
    imperatives: tuple[Imperative, ...]

    def __post_init__(self):
        if not self.imperatives:
            raise SchemaError("a query needs at least one imperative to evaluate")


@dataclass(frozen=True)
class ImperativeResult:
    probability: float | None  # None when the premise has zero mass
    note: str = ""


@dataclass
class QueryResult:
    values: list[ImperativeResult]
    report: SolveReport | None = None  # projection diagnostics, if any


# ---------------------------------------------------------------------------
# Simple queries


def marginals(dist: FactoredDistribution) -> dict[str, dict[str, float]]:
    return {
        v.name: {
            value: float(p)
            for value, p in zip(v.values, dist.variable_marginal(v))
        }
        for v in dist.variables
    }


def instantiate(
    dist: FactoredDistribution, evidence: list[tuple[Variable, str]]
) -> FactoredDistribution:
    """Condition a copy of the distribution on variable = value conjuncts.

    Conditioning is sequential, so the first conjunct whose value has no
    remaining probability is the one reported.
    """
    snapshot = dist.copy()
    for variable, value in evidence:
        variable.index_of(value)  # domain check first, clear error position
        atom = Atom(variable, Comparator.EQ, value)
        hosts = [h for h in snapshot.tree.hyperedges if variable in h.var_set]
        host = min(hosts, key=lambda h: (h.table_size, h.index))
        table = snapshot.tables[host.index]
        mask = sentence_mask(atom, table.variables)
        if float(table.cells[mask].sum()) <= 0.0:
            raise ImpossibleEvidenceError(
                f"evidence {variable.name} = {value} has probability zero",
                variable=variable.name,
                value=value,
            )
        table.cells[~mask] = 0.0
        table.normalize()
        snapshot.propagate_from(host.index)
    return snapshot


# ---------------------------------------------------------------------------
# Complex queries


def _query_distribution(
    dist: FactoredDistribution, hypotheticals: tuple[Rule, ...]
) -> tuple[FactoredDistribution, list[int]]:
    """Copy of the distribution whose tree hosts every hypothetical.

    A hypothetical spanning several hyperedges triggers a query-local
    contraction of the covering subtree into one merged hyperedge; the
    compiled structure is never touched.
    """
    qdist = dist.copy()
    for rule in hypotheticals:
        cluster = rule.cluster()
        if any(cluster <= h.var_set for h in qdist.tree.hyperedges):
            continue
        group = qdist.covering_subtree(set(cluster))
        qdist = qdist.contract_nodes(group)
    homes = []
    for rule in hypotheticals:
        hosts = [h for h in qdist.tree.hyperedges if rule.cluster() <= h.var_set]
        homes.append(min(hosts, key=lambda h: (h.table_size, h.index)).index)
    return qdist, homes


def complex_query(
    dist: FactoredDistribution,
    spec: QuerySpec,
    tolerance: float = 1e-8,
    max_sweeps: int = 1000,
) -> QueryResult:
    """Project onto the hypotheticals, evaluate the imperatives, discard."""
    if spec.hypotheticals:
        qdist, homes = _query_distribution(dist, spec.hypotheticals)
        report = solve(
            qdist, list(spec.hypotheticals), homes, tolerance, max_sweeps
        )
        if report.status != "converged":
            raise InfeasibleHypotheticalsError(
                "hypotheticals cannot be satisfied: "
                + (report.message or report.status),
                report=report,
            )
    else:
        qdist, report = dist, None

    values = []
    for imperative in spec.imperatives:
        if imperative.premise is None:
            values.append(ImperativeResult(qdist.query_sentence(imperative.conclusion)))
            continue
        prem_mass = qdist.query_sentence(imperative.premise)
        if prem_mass <= 0.0:
            values.append(
                ImperativeResult(None, note="premise has probability zero")
            )
            continue
        values.append(
            ImperativeResult(qdist.conditional(imperative.conclusion, imperative.premise))
        )
    return QueryResult(values, report)


# ---------------------------------------------------------------------------
# Query scripts


def _split_conditional_bar(text: str, line: int) -> tuple[str, str | None]:
    """Split ``C | P`` on the single top-level bar, if present."""
    depth = 0
    positions = []
    for i, ch in enumerate(text):
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
        elif ch == "|" and depth == 0:
            positions.append(i)
    if not positions:
        return text, None
    if len(positions) > 1:
        raise ParseError(
            "more than one top-level '|' in eval line; parenthesize disjunctions",
            line, positions[1] + 1,
        )
    i = positions[0]
    return text[:i], text[i + 1:]


def parse_query_script(
    text: str, schema: dict[str, Variable] | list[Variable]
) -> QuerySpec:
    """Parse assume/eval lines into a QuerySpec."""
    if not isinstance(schema, dict):
        schema = {v.name: v for v in schema}
    hypotheticals: list[Rule] = []
    imperatives: list[Imperative] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "assume":
            hypotheticals.append(
                parse_rule(rest, schema, rule_id=f"Q{len(hypotheticals) + 1}", line=lineno)
            )
        elif head == "eval":
            conc_text, prem_text = _split_conditional_bar(rest, lineno)
            conclusion = parse_fact(conc_text, schema, line=lineno)
            premise = (
                parse_fact(prem_text, schema, line=lineno)
                if prem_text is not None
                else None
            )
            imperatives.append(Imperative(conclusion, premise))
        else:
            raise ParseError(f"expected 'assume' or 'eval', found {head!r}", lineno, 1)
    return QuerySpec(tuple(hypotheticals), tuple(imperatives))
