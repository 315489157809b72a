"""Versioned on-disk form of a compiled knowledge base.

One JSON document holds the canonical source text, the hypertree lists,
every hyperedge table as a base64 block of little-endian float64 cells,
and the solve report. No timestamps or environment data: compiling the
same input yields a byte-identical archive, and loading reproduces every
cell exactly.
"""

from __future__ import annotations

import base64
import json
from dataclasses import replace as dc_replace

import numpy as np

from .engine import CliqueTable, FactoredDistribution
from .errors import SchemaError
from .hypertree import Hyperedge, Hypertree
from .maxent import (
    EntropyLedger,
    LedgerEntry,
    RuleResidual,
    SolveReport,
    ledger_snapshot,
)
from .parser import KnowledgeBaseSource, format_kb, parse_kb

FORMAT_NAME = "maxentkb-archive"
FORMAT_VERSION = 1


def _encode_cells(cells: np.ndarray) -> str:
    return base64.b64encode(np.asarray(cells, dtype="<f8").tobytes()).decode("ascii")


def _decode_cells(blob: str, expected: int) -> np.ndarray:
    cells = np.frombuffer(base64.b64decode(blob), dtype="<f8").astype(np.float64)
    if cells.size != expected:
        raise SchemaError(f"archive table has {cells.size} cells, expected {expected}")
    return cells


def archive_document(
    source: KnowledgeBaseSource,
    dist: FactoredDistribution,
    rule_homes: tuple[int, ...],
    report: SolveReport,
) -> dict:
    tree = dist.tree
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "source": format_kb(source),
        # canonical text rounds targets to 6 decimals; learned targets need
        # full precision to reproduce the solved state exactly
        "rule_targets": [r.target for r in source.rules],
        "hyperedges": [[v.name for v in h.variables] for h in tree.hyperedges],
        "tree_edges": [list(e) for e in tree.tree_edges],
        "separators": [[v.name for v in sep] for sep in tree.separators],
        "rule_homes": list(rule_homes),
        "tables": [_encode_cells(t.cells) for t in dist.tables],
        "report": ledger_snapshot(report),
    }


def dumps(document: dict) -> str:
    return json.dumps(document, indent=2) + "\n"


def loads(text: str) -> tuple[KnowledgeBaseSource, FactoredDistribution, tuple[int, ...], SolveReport]:
    """Parse and validate an archive; reconstructs the exact saved state."""
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"archive is not valid JSON: {exc}") from None
    if document.get("format") != FORMAT_NAME:
        raise SchemaError("not a knowledge-base archive")
    if document.get("version") != FORMAT_VERSION:
        raise SchemaError(
            f"archive version {document.get('version')} unsupported "
            f"(expected {FORMAT_VERSION})"
        )

    source = parse_kb(document["source"])
    targets = [float(t) for t in document["rule_targets"]]
    if len(targets) != len(source.rules):
        raise SchemaError("archive rule_targets does not match the rule count")
    if any(abs(r.target - t) > 5e-7 for r, t in zip(source.rules, targets)):
        raise SchemaError("archive rule_targets disagree with the source text")
    source = dc_replace(
        source,
        rules=tuple(
            dc_replace(r, target=t) for r, t in zip(source.rules, targets)
        ),
    )
    by_name = {v.name: v for v in source.variables}

    def vars_of(names: list[str]):
        try:
            return tuple(by_name[n] for n in names)
        except KeyError as exc:
            raise SchemaError(f"archive names unknown variable {exc.args[0]!r}") from None

    hyperedges = tuple(
        Hyperedge(i, vars_of(names)) for i, names in enumerate(document["hyperedges"])
    )
    tree_edges = tuple((int(i), int(j)) for i, j in document["tree_edges"])
    separators = tuple(vars_of(names) for names in document["separators"])
    rule_homes = tuple(int(h) for h in document["rule_homes"])
    if len(rule_homes) != len(source.rules):
        raise SchemaError("archive rule_homes does not match the rule count")
    for home, rule in zip(rule_homes, source.rules):
        if not rule.cluster() <= hyperedges[home].var_set:
            raise SchemaError(f"rule {rule.id!r} home does not contain its cluster")

    tree = Hypertree(hyperedges, tree_edges, separators, rule_homes)
    tables = [
        CliqueTable(h.variables, _decode_cells(blob, h.table_size))
        for h, blob in zip(hyperedges, document["tables"], strict=True)
    ]
    dist = FactoredDistribution(tree, source.variables, tables)
    dist.assert_calibrated(1e-9)
    report = report_from_snapshot(document["report"])
    return source, dist, rule_homes, report


def report_from_snapshot(snapshot: dict) -> SolveReport:
    ledger = EntropyLedger(
        uniform_entropy_bits=float(snapshot["uniform_entropy_bits"]),
        entries=[LedgerEntry(**e) for e in snapshot["entries"]],
    )
    return SolveReport(
        status=snapshot["status"],
        sweeps=int(snapshot["sweeps"]),
        residuals=[RuleResidual(**r) for r in snapshot["residuals"]],
        ledger=ledger,
        offenders=tuple(snapshot.get("offenders", ())),
        message=snapshot.get("message", ""),
    )
