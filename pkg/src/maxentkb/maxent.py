"""Cyclic minimum-relative-entropy solver over the factored distribution.

Rules are applied one at a time in declaration order, each application
rescaling the three blocks of its home hyperedge table and propagating
the change through the tree. For consistent rule sets this converges to
the distribution of minimum relative entropy (maximum entropy when the
start is uniform) among all distributions satisfying every rule.

Every application appends to an entropy ledger: the per-step information
gain in bits, its running sum, and the current absolute entropy of the
whole distribution, kept cheap by summing hyperedge entropies minus
separator entropies.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InfeasibleRuleError
from .model import JointTable, Rule, sentence_mask, world_count
from .engine import FactoredDistribution
from .projection import PlateauDetector, premise_posterior_float, rule_update

__all__ = [
    "absolute_entropy",
    "relative_entropy",
    "factored_absolute_entropy",
    "uniform_entropy_bits",
    "premise_posterior_float",
    "apply_rule",
    "compute_residuals",
    "solve",
    "ledger_snapshot",
    "ledger_csv",
    "ledger_json",
    "RuleResidual",
    "LedgerEntry",
    "EntropyLedger",
    "SolveReport",
]

LEDGER_COLUMNS = (
    "sweep",
    "rule_id",
    "increment_bits",
    "cumulative_bits",
    "absolute_entropy_bits",
    "uniform_minus_cumulative",
)


def absolute_entropy(p) -> float:
    """-Σ p ld p in bits, 0·ld0 := 0; accepts a JointTable or raw cells."""
    cells = p.cells if isinstance(p, JointTable) else np.asarray(p, dtype=np.float64)
    pos = cells[cells > 0]
    return float(-(pos * np.log2(pos)).sum())


def relative_entropy(p, p0) -> float:
    """Σ p ld(p/p0) in bits; +inf when p has mass outside p0's support."""
    pc = p.cells if isinstance(p, JointTable) else np.asarray(p, dtype=np.float64)
    qc = p0.cells if isinstance(p0, JointTable) else np.asarray(p0, dtype=np.float64)
    if pc.shape != qc.shape:
        raise ValueError("distributions must share one world space")
    moved = pc > 0
    if np.any(moved & (qc <= 0)):
        return math.inf
    return float((pc[moved] * np.log2(pc[moved] / qc[moved])).sum())


def factored_absolute_entropy(dist: FactoredDistribution) -> float:
    """Entropy of the implied joint: Σ H(hyperedge) − Σ H(separator)."""
    total = sum(absolute_entropy(t.cells) for t in dist.tables)
    for (i, _j), sep in zip(dist.tree.tree_edges, dist.tree.separators):
        total -= absolute_entropy(dist.tables[i].marginal(sep))
    return float(total)


def uniform_entropy_bits(dist: FactoredDistribution) -> float:
    return math.log2(world_count(dist.variables))


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class RuleResidual:
    rule_id: str
    achieved: float  # current conditional, NaN when the premise has no mass
    target: float
    residual: float


@dataclass(frozen=True)
class LedgerEntry:
    sweep: int
    rule_id: str
    increment_bits: float
    cumulative_bits: float
    absolute_entropy_bits: float
    uniform_minus_cumulative: float


@dataclass
class EntropyLedger:
    uniform_entropy_bits: float
    entries: list[LedgerEntry] = field(default_factory=list)

    def append(self, sweep: int, rule_id: str, increment: float, entropy: float) -> None:
        cumulative = increment + (self.entries[-1].cumulative_bits if self.entries else 0.0)
        self.entries.append(
            LedgerEntry(
                sweep=sweep,
                rule_id=rule_id,
                increment_bits=increment,
                cumulative_bits=cumulative,
                absolute_entropy_bits=entropy,
                uniform_minus_cumulative=self.uniform_entropy_bits - cumulative,
            )
        )

    @property
    def cumulative_bits(self) -> float:
        return self.entries[-1].cumulative_bits if self.entries else 0.0


@dataclass
class SolveReport:
    status: str  # converged | inconsistent | sweep-limit
    sweeps: int
    residuals: list[RuleResidual]
    ledger: EntropyLedger
    offenders: tuple[str, ...] = ()
    message: str = ""

    @property
    def max_residual(self) -> float:
        return max((r.residual for r in self.residuals), default=0.0)


def ledger_snapshot(report: SolveReport) -> dict:
    """JSON-ready view of the solve outcome and its entropy ledger."""
    return {
        "status": report.status,
        "sweeps": report.sweeps,
        "message": report.message,
        "offenders": list(report.offenders),
        "residuals": [asdict(r) for r in report.residuals],
        "uniform_entropy_bits": report.ledger.uniform_entropy_bits,
        "cumulative_bits": report.ledger.cumulative_bits,
        "entries": [asdict(e) for e in report.ledger.entries],
    }


def ledger_csv(report: SolveReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(LEDGER_COLUMNS)
    for entry in report.ledger.entries:
        row = asdict(entry)
        writer.writerow([row[c] for c in LEDGER_COLUMNS])
    return out.getvalue()


def ledger_json(report: SolveReport) -> str:
    return json.dumps(ledger_snapshot(report), indent=2) + "\n"


# ---------------------------------------------------------------------------
# Rule application


def _block_masses(dist: FactoredDistribution, rule: Rule, home: int):
    table = dist.tables[home]
    prem = sentence_mask(rule.premise, table.variables)
    conc = sentence_mask(rule.conclusion, table.variables)
    blocks = (~prem, prem & ~conc, prem & conc)
    b0, b10, b11 = (float(table.cells[b].sum()) for b in blocks)
    return blocks, b0, b10, b11


def apply_rule(dist: FactoredDistribution, rule: Rule, home: int) -> float:
    """One projection step on the rule's home table; returns bits gained."""
    table = dist.tables[home]
    blocks, b0, b10, b11 = _block_masses(dist, rule, home)
    factors, increment = rule_update(rule, m11=b11, m10=b10, m0=b0)
    for mask, factor in zip(blocks, (factors.outside, factors.conc_false, factors.conc_true)):
        table.cells[mask] *= factor
    table.normalize()
    dist.propagate_from(home)
    return increment


def compute_residuals(
    dist: FactoredDistribution, rules: list[Rule], homes: list[int]
) -> list[RuleResidual]:
    out = []
    for rule, home in zip(rules, homes):
        table = dist.tables[home]
        prem_mass = table.sentence_mass(rule.premise)
        if prem_mass <= 0.0:
            out.append(RuleResidual(rule.id, math.nan, rule.target, 1.0))
            continue
        joint = table.sentence_mass(rule.premise & rule.conclusion)
        achieved = min(joint / prem_mass, 1.0)
        out.append(RuleResidual(rule.id, achieved, rule.target, abs(achieved - rule.target)))
    return out


def solve(
    dist: FactoredDistribution,
    rules: list[Rule],
    homes: list[int],
    tolerance: float = 1e-8,
    max_sweeps: int = 1000,
    plateau_window: int = 25,
) -> SolveReport:
    """Cyclic application of all rules until every conditional fits.

    Statuses: ``converged`` (max residual ≤ tolerance), ``inconsistent``
    (an infeasible update, or a residual plateau — the iteration stopped
    making progress while still off target), ``sweep-limit``.
    """
    ledger = EntropyLedger(uniform_entropy_bits=uniform_entropy_bits(dist))
    residuals = compute_residuals(dist, rules, homes)
    worst = max((r.residual for r in residuals), default=0.0)
    if not rules or worst <= tolerance:
        return SolveReport("converged", 0, residuals, ledger)

    plateau = PlateauDetector(window=plateau_window)
    for sweep in range(1, max_sweeps + 1):
        for rule, home in zip(rules, homes):
            try:
                increment = apply_rule(dist, rule, home)
            except InfeasibleRuleError as exc:
                return SolveReport(
                    "inconsistent",
                    sweep,
                    compute_residuals(dist, rules, homes),
                    ledger,
                    offenders=(rule.id,),
                    message=str(exc),
                )
            ledger.append(sweep, rule.id, increment, factored_absolute_entropy(dist))
        residuals = compute_residuals(dist, rules, homes)
        worst = max(r.residual for r in residuals)
        if worst <= tolerance:
            return SolveReport("converged", sweep, residuals, ledger)
        if plateau.observe(worst):
            cutoff = max(tolerance, worst * 0.5)
            offenders = tuple(r.rule_id for r in residuals if r.residual >= cutoff)
            return SolveReport(
                "inconsistent",
                sweep,
                residuals,
                ledger,
                offenders=offenders,
                message=(
                    "residuals stopped improving while above tolerance; "
                    "the listed rules cannot all hold at once"
                ),
            )
    return SolveReport("sweep-limit", max_sweeps, residuals, ledger)
