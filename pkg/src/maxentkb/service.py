"""HTTP/JSON consultation service over a compiled knowledge base.

Read endpoints expose the schema, graphs, marginals, and the entropy
ledger. Sessions hold per-client evidence: every change reconditions a
fresh copy of the session's base distribution, so mutations are atomic
and sessions never observe each other. Complex queries run against the
session snapshot. Alpha-learning takes the single writer claim and
atomically replaces the served knowledge base.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field, replace

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .engine import FactoredDistribution
from .errors import (
    ImpossibleEvidenceError,
    InfeasibleHypotheticalsError,
    KbError,
)
from .hypertree import (
    dependency_graph,
    dependency_graph_document,
    mixed_graph,
    mixed_graph_document,
    structure_graph_document,
)
from .learning import alpha_learn, sample_from_csv
from .maxent import ledger_snapshot
from .model import Mode, Rule
from .parser import format_sentence, parse_fact
from .query import Imperative, QuerySpec, complex_query, instantiate, marginals
from .shell import CompiledKb


class EvidenceItem(BaseModel):
    variable: str
    value: str


class EvidenceBody(BaseModel):
    set: list[EvidenceItem] = Field(default_factory=list)
    clear: list[str] = Field(default_factory=list)
    reset: bool = False


class HypotheticalBody(BaseModel):
    conclusion: str
    premise: str = "*"
    probability: float
    mode: str = "float"


class ImperativeBody(BaseModel):
    conclusion: str
    premise: str | None = None


class QueryBody(BaseModel):
    hypotheticals: list[HypotheticalBody] = Field(default_factory=list)
    imperatives: list[ImperativeBody]


class LearnBody(BaseModel):
    alpha: float
    csv: str


@dataclass
class Session:
    id: str
    base: CompiledKb  # the compiled KB this session was opened against
    created: float
    evidence: dict[str, str] = field(default_factory=dict)
    snapshot: FactoredDistribution | None = None

    def distribution(self) -> FactoredDistribution:
        return self.snapshot if self.snapshot is not None else self.base.dist


def _rule_json(rule: Rule) -> dict:
    return {
        "id": rule.id,
        "premise": format_sentence(rule.premise),
        "conclusion": format_sentence(rule.conclusion),
        "target": rule.target,
        "mode": rule.mode.value,
    }


def create_app(compiled: CompiledKb) -> FastAPI:
    app = FastAPI(title="maxentkb consultation service", version="1.0.0")
    state = {"compiled": compiled}
    sessions: dict[str, Session] = {}
    writer_lock = threading.Lock()

    def current() -> CompiledKb:
        return state["compiled"]

    def get_session(session_id: str) -> Session:
        try:
            return sessions[session_id]
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}") from None

    @app.get("/kb")
    def kb_info():
        c = current()
        return {
            "variables": [
                {"name": v.name, "kind": v.kind.value, "values": list(v.values)}
                for v in c.source.variables
            ],
            "rules": [_rule_json(r) for r in c.source.rules],
            "options": {
                "tolerance": c.options.tolerance,
                "max_sweeps": c.options.max_sweeps,
                "heuristic": c.options.heuristic,
            },
            "report": ledger_snapshot(c.report),
        }

    @app.get("/kb/graph")
    def kb_graph(kind: str = "structure"):
        c = current()
        if kind == "dependency":
            return dependency_graph_document(
                dependency_graph(c.source.variables, c.source.rules)
            )
        if kind == "mixed":
            return mixed_graph_document(
                mixed_graph(c.source.variables, c.source.rules)
            )
        if kind == "structure":
            return structure_graph_document(c.dist.tree)
        raise HTTPException(422, f"unknown graph kind {kind!r}")

    @app.get("/kb/marginals")
    def kb_marginals():
        return marginals(current().dist)

    @app.get("/kb/ledger")
    def kb_ledger():
        return ledger_snapshot(current().report)

    @app.post("/sessions")
    def open_session():
        session = Session(id=uuid.uuid4().hex, base=current(), created=time.time())
        sessions[session.id] = session
        return {
            "id": session.id,
            "created": session.created,
            "evidence": session.evidence,
            "marginals": marginals(session.distribution()),
        }

    @app.post("/sessions/{session_id}/evidence")
    def set_evidence(session_id: str, body: EvidenceBody):
        session = get_session(session_id)
        schema = session.base.schema
        desired = {} if body.reset else dict(session.evidence)
        for name in body.clear:
            desired.pop(name, None)
        for item in body.set:
            if item.variable not in schema:
                raise HTTPException(422, f"unknown variable {item.variable!r}")
            variable = schema[item.variable]
            if item.value not in variable.values:
                raise HTTPException(
                    422, f"{item.value!r} is not a value of {item.variable!r}"
                )
            desired[item.variable] = item.value

        pairs = [
            (schema[name], value)
            for name, value in desired.items()
        ]
        try:
            snapshot = instantiate(session.base.dist, pairs) if pairs else None
        except ImpossibleEvidenceError as exc:
            raise HTTPException(
                422,
                {
                    "error": "impossible evidence",
                    "variable": exc.variable,
                    "value": exc.value,
                },
            ) from None
        session.evidence = desired
        session.snapshot = snapshot
        return {
            "id": session.id,
            "evidence": session.evidence,
            "marginals": marginals(session.distribution()),
        }

    @app.post("/sessions/{session_id}/query")
    def run_query(session_id: str, body: QueryBody):
        session = get_session(session_id)
        schema = session.base.schema
        options = session.base.options
        try:
            hypotheticals = tuple(
                Rule(
                    id=f"Q{i + 1}",
                    premise=parse_fact(h.premise, schema),
                    conclusion=parse_fact(h.conclusion, schema),
                    target=h.probability,
                    mode=Mode(h.mode),
                )
                for i, h in enumerate(body.hypotheticals)
            )
            imperatives = tuple(
                Imperative(
                    conclusion=parse_fact(item.conclusion, schema),
                    premise=(
                        parse_fact(item.premise, schema)
                        if item.premise is not None
                        else None
                    ),
                )
                for item in body.imperatives
            )
            spec = QuerySpec(hypotheticals, imperatives)
        except ValueError as exc:  # bad mode string
            raise HTTPException(422, str(exc)) from None
        except KbError as exc:
            raise HTTPException(422, str(exc)) from None

        try:
            result = complex_query(
                session.distribution(),
                spec,
                tolerance=options.tolerance,
                max_sweeps=options.max_sweeps,
            )
        except InfeasibleHypotheticalsError as exc:
            raise HTTPException(
                422,
                {
                    "error": "infeasible hypotheticals",
                    "offenders": list(exc.report.offenders) if exc.report else [],
                    "message": str(exc),
                },
            ) from None
        except KbError as exc:
            raise HTTPException(422, str(exc)) from None

        return {
            "values": [
                {"probability": v.probability, "note": v.note}
                for v in result.values
            ],
            "projection": (
                ledger_snapshot(result.report) if result.report is not None else None
            ),
        }

    @app.post("/kb/learn")
    def learn(body: LearnBody):
        if not writer_lock.acquire(blocking=False):
            raise HTTPException(409, "another learn operation is in progress")
        try:
            c = current()
            try:
                sample = sample_from_csv(body.csv, c.source.variables)
                dist = c.dist.copy()
                outcome = alpha_learn(
                    dist,
                    sample,
                    body.alpha,
                    list(c.source.rules),
                    list(c.rule_homes),
                    tolerance=c.options.tolerance,
                    max_sweeps=c.options.max_sweeps,
                )
            except KbError as exc:
                raise HTTPException(422, str(exc)) from None
            response = {
                "report": ledger_snapshot(outcome.report),
                "warnings": list(outcome.warnings),
                "applied": outcome.report.status == "converged",
            }
            if outcome.report.status == "converged":
                new_source = replace(c.source, rules=outcome.rules)
                # alpha 0 changes nothing, so keep the original report as the
                # provenance of the served distribution.
                report = c.report if body.alpha == 0.0 else outcome.report
                state["compiled"] = CompiledKb(new_source, dist, outcome.homes, report)
            return response
        finally:
            writer_lock.release()

    return app
