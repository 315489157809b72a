"""Inductive adaptation of the distribution to observed data.

Two halves: drawing samples from the compiled joint (forward sampling
over the hypertree, root first, children conditional on their separator
configuration) and alpha-learning, which blends each hyperedge table
with the sample's relative frequencies,

    p_new = (1 - alpha) * p_old + alpha * f,

re-reads every rule's target as its conditional probability under the
blended state, and re-runs the solver from there.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .engine import FactoredDistribution, _shape
from .errors import OutOfRangeError, SchemaError
from .maxent import SolveReport, solve
from .model import Rule, Variable

#: Premise mass below this drops the rule during target re-reading.
_DEAD_PREMISE = 1e-12


@dataclass
class Sample:
    """Complete realizations of every variable, stored as value indices."""

    variables: tuple[Variable, ...]
    rows: np.ndarray  # shape (n, len(variables)), dtype intp
    note: str = ""

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.intp).reshape(-1, len(self.variables))
        for j, var in enumerate(self.variables):
            col = self.rows[:, j]
            if col.size and (col.min() < 0 or col.max() >= var.size):
                raise SchemaError(f"sample value index out of range for {var.name!r}")

    def __len__(self) -> int:
        return self.rows.shape[0]


def draw_sample(dist: FactoredDistribution, n: int, seed: int) -> Sample:
    """Forward-sample n complete rows; deterministic for a given seed.

    The root hyperedge's configurations are drawn from its table; each
    child hyperedge then draws its remaining variables conditional on
    the separator configuration fixed by its parent, in breadth-first
    tree order.
    """
    if n < 0:
        raise OutOfRangeError("sample size must be non-negative")
    rng = np.random.default_rng(seed)
    columns: dict[Variable, np.ndarray] = {}

    root = dist.tree.hyperedges[0]
    root_table = dist.tables[0]
    flat = rng.choice(root_table.cells.size, size=n, p=root_table.cells)
    for var, idx in zip(root.variables, np.unravel_index(flat, _shape(root.variables))):
        columns[var] = idx

    visited = {0}
    queue = deque([0])
    while queue:
        sender = queue.popleft()
        for child in dist.tree.neighbors[sender]:
            if child in visited:
                continue
            visited.add(child)
            queue.append(child)
            _sample_child(dist, child, sender, n, rng, columns)

    rows = np.stack([columns[v] for v in dist.variables], axis=1) if n else np.zeros(
        (0, len(dist.variables)), dtype=np.intp
    )
    return Sample(dist.variables, rows, note=f"drawn n={n} seed={seed}")


def _sample_child(
    dist: FactoredDistribution,
    child: int,
    parent: int,
    n: int,
    rng: np.random.Generator,
    columns: dict[Variable, np.ndarray],
) -> None:
    table = dist.tables[child]
    sep = dist.tree.separator_of(parent, child)
    rest = tuple(v for v in table.variables if v not in sep)
    if not rest:
        return

    shape = _shape(table.variables)
    sep_axes = tuple(table.variables.index(v) for v in sep)
    rest_axes = tuple(table.variables.index(v) for v in rest)
    # conditional tables: one row per separator configuration
    moved = np.moveaxis(
        table.cells.reshape(shape), sep_axes + rest_axes, range(len(shape))
    )
    sep_size = int(np.prod([v.size for v in sep], dtype=np.int64)) if sep else 1
    cond = moved.reshape(sep_size, -1)
    row_sums = cond.sum(axis=1, keepdims=True)
    cond = np.divide(cond, row_sums, out=np.zeros_like(cond), where=row_sums > 0)

    if sep:
        sep_flat = np.ravel_multi_index(
            tuple(columns[v] for v in sep), _shape(sep)
        )
    else:
        sep_flat = np.zeros(n, dtype=np.intp)

    rest_flat = np.zeros(n, dtype=np.intp)
    for config in np.unique(sep_flat):
        where = sep_flat == config
        rest_flat[where] = rng.choice(
            cond.shape[1], size=int(where.sum()), p=cond[config]
        )
    for var, idx in zip(rest, np.unravel_index(rest_flat, _shape(rest))):
        columns[var] = idx


# ---------------------------------------------------------------------------
# CSV round-trip


def sample_to_csv(sample: Sample) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow([v.name for v in sample.variables])
    for row in sample.rows:
        writer.writerow([v.values[i] for v, i in zip(sample.variables, row)])
    return out.getvalue()


def sample_from_csv(text: str, variables: tuple[Variable, ...]) -> Sample:
    """Parse a sample CSV; header must name exactly the KB variables."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("sample CSV is empty") from None
    by_name = {v.name: v for v in variables}
    if set(header) != set(by_name) or len(header) != len(by_name):
        raise SchemaError(
            f"sample header {header} does not match KB variables "
            f"{[v.name for v in variables]}"
        )
    order = [header.index(v.name) for v in variables]
    rows = []
    for lineno, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(header):
            raise SchemaError(f"sample row {lineno} has {len(record)} fields")
        try:
            rows.append(
                [variables[j].index_of(record[order[j]]) for j in range(len(variables))]
            )
        except SchemaError as exc:
            raise SchemaError(f"sample row {lineno}: {exc.message}") from None
    return Sample(tuple(variables), np.array(rows, dtype=np.intp).reshape(-1, len(variables)))


# ---------------------------------------------------------------------------
# Alpha-learning


def hyperedge_frequencies(sample: Sample, variables: tuple[Variable, ...]) -> np.ndarray:
    """Relative frequency of each configuration of `variables` in the sample."""
    positions = [sample.variables.index(v) for v in variables]
    flat = np.ravel_multi_index(
        tuple(sample.rows[:, p] for p in positions), _shape(variables)
    )
    counts = np.bincount(flat, minlength=int(np.prod(_shape(variables), dtype=np.int64)))
    return counts / max(len(sample), 1)


@dataclass
class LearnOutcome:
    report: SolveReport
    rules: tuple[Rule, ...]  # re-targeted (and possibly thinned) rule set
    homes: tuple[int, ...]  # aligned with rules
    warnings: tuple[str, ...] = ()


def alpha_learn(
    dist: FactoredDistribution,
    sample: Sample | None,
    alpha: float,
    rules: list[Rule],
    homes: list[int],
    tolerance: float = 1e-8,
    max_sweeps: int = 1000,
) -> LearnOutcome:
    """Blend, re-read targets, re-solve; mutates dist in place.

    alpha = 0 is exactly the identity: tables and rule targets stay
    untouched and the solver confirms convergence in zero sweeps.
    """
    if not 0.0 <= alpha <= 1.0:
        raise OutOfRangeError(f"alpha {alpha} outside [0, 1]")
    if alpha == 0.0:
        report = solve(dist, rules, homes, tolerance, max_sweeps)
        return LearnOutcome(report, tuple(rules), tuple(homes))
    if sample is None or len(sample) == 0:
        raise SchemaError("alpha-learning with alpha > 0 needs a non-empty sample")
    if sample.variables != dist.variables:
        raise SchemaError("sample schema does not match the knowledge base")

    for table in dist.tables:
        f = hyperedge_frequencies(sample, table.variables)
        table.cells = (1.0 - alpha) * table.cells + alpha * f
        table.normalize()
    # blending consistent states is consistent; wash out float drift
    dist.recalibrate()

    kept: list[Rule] = []
    kept_homes: list[int] = []
    warnings: list[str] = []
    for rule, home in zip(rules, homes):
        table = dist.tables[home]
        prem_mass = table.sentence_mass(rule.premise)
        if prem_mass <= _DEAD_PREMISE:
            warnings.append(
                f"rule {rule.id!r} dropped: premise has no mass under the blended distribution"
            )
            continue
        joint = table.sentence_mass(rule.premise & rule.conclusion)
        kept.append(replace(rule, target=min(joint / prem_mass, 1.0)))
        kept_homes.append(home)

    report = solve(dist, kept, kept_homes, tolerance, max_sweeps)
    return LearnOutcome(report, tuple(kept), tuple(kept_homes), tuple(warnings))
