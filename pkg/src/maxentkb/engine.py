"""Factored storage of the joint distribution over the hypertree.

Each hyperedge owns one normalized marginal table over its variables.
Adjacent tables agree on their separator marginals (calibration), which
makes the collection equivalent to one joint distribution: the product
of the hyperedge marginals divided by the product of the separator
marginals. All queries and updates work on these local tables; the
explicit joint is only materialized for small universes, mainly as a
brute-force reference.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    CapacityError,
    InfeasibleRuleError,
    InternalError,
    PropagationSupportError,
    SchemaError,
    UndefinedConditionalError,
)
from .hypertree import Hyperedge, Hypertree
from .model import (
    JointTable,
    Rule,
    Sentence,
    Taut,
    Variable,
    conditional_probability,
    sentence_mask,
    sentence_probability,
    variables_of,
    world_count,
)
from .projection import PlateauDetector, rule_update

#: Explicit-joint materialization refuses universes above this cell count.
ORACLE_WORLD_CAP = 2**20

#: Separator support below this counts as zero when forming ratios.
_SUPPORT_EPS = 1e-15


def _shape(variables: Sequence[Variable]) -> tuple[int, ...]:
    return tuple(v.size for v in variables)


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Cellwise num/den with the 0/0 := 0 convention."""
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def _broadcast(
    sub_vars: Sequence[Variable],
    sub_cells: np.ndarray,
    variables: Sequence[Variable],
) -> np.ndarray:
    """Expand a table over a variable subset to the full shape of `variables`.

    Both tuples must list variables in the same global order.
    """
    view = [1] * len(variables)
    for var, size in zip(sub_vars, (v.size for v in sub_vars)):
        view[list(variables).index(var)] = size
    return sub_cells.reshape(view)


@dataclass
class CliqueTable:
    """Normalized marginal table over one hyperedge's variables."""

    variables: tuple[Variable, ...]
    cells: np.ndarray  # flat, C-order, last variable fastest

    def __post_init__(self):
        self.variables = tuple(self.variables)
        self.cells = np.asarray(self.cells, dtype=np.float64).reshape(-1)
        if self.cells.size != world_count(self.variables):
            raise SchemaError("cell count does not match the hyperedge world space")
        if np.any(self.cells < 0):
            raise SchemaError("negative cell in marginal table")

    @classmethod
    def uniform(cls, variables: Sequence[Variable]) -> "CliqueTable":
        n = world_count(tuple(variables))
        return cls(tuple(variables), np.full(n, 1.0 / n))

    def copy(self) -> "CliqueTable":
        return CliqueTable(self.variables, self.cells.copy())

    def normalize(self) -> None:
        total = float(self.cells.sum())
        if total <= 0.0:
            raise SchemaError("cannot normalize a zero-mass table")
        self.cells /= total

    def marginal(self, onto: Sequence[Variable]) -> np.ndarray:
        """Sum out everything but `onto` (must be in table order); flat result."""
        onto = tuple(onto)
        if not onto:
            return np.array([float(self.cells.sum())])
        positions = [self.variables.index(v) for v in onto]
        if positions != sorted(positions):
            raise InternalError("marginal target not in table variable order")
        drop = tuple(i for i in range(len(self.variables)) if i not in positions)
        return self.cells.reshape(_shape(self.variables)).sum(axis=drop).reshape(-1)

    def sentence_mass(self, sentence: Sentence) -> float:
        mask = sentence_mask(sentence, self.variables)
        return float(np.clip(self.cells[mask].sum(), 0.0, 1.0))


@dataclass
class FactoredDistribution:
    """One CliqueTable per hyperedge, kept calibrated; single writer."""

    tree: Hypertree
    variables: tuple[Variable, ...]  # declaration order, spans every hyperedge
    tables: list[CliqueTable]

    def __post_init__(self):
        if len(self.tables) != len(self.tree.hyperedges):
            raise SchemaError("one table per hyperedge required")
        for edge, table in zip(self.tree.hyperedges, self.tables):
            if table.variables != edge.variables:
                raise SchemaError(
                    f"table variables {table.variables} do not match hyperedge {edge.label}"
                )

    @classmethod
    def init_uniform(
        cls, tree: Hypertree, variables: Sequence[Variable]
    ) -> "FactoredDistribution":
        tables = [CliqueTable.uniform(h.variables) for h in tree.hyperedges]
        return cls(tree, tuple(variables), tables)

    def copy(self) -> "FactoredDistribution":
        return FactoredDistribution(
            self.tree, self.variables, [t.copy() for t in self.tables]
        )

    # -- propagation --------------------------------------------------------

    def propagate_from(self, source: int) -> None:
        """Push the source table's new separator marginals over the tree.

        Breadth-first; each neighbor table is scaled cellwise by
        S_new/S_old on its separator (0/0 := 0) and renormalized, which
        restores full calibration when only the source was modified.
        """
        visited = {source}
        queue = deque([source])
        while queue:
            sender = queue.popleft()
            for receiver in self.tree.neighbors[sender]:
                if receiver in visited:
                    continue
                visited.add(receiver)
                self._absorb(sender, receiver)
                queue.append(receiver)

    def _absorb(self, sender: int, receiver: int) -> None:
        sep = self.tree.separator_of(sender, receiver)
        s_new = self.tables[sender].marginal(sep)
        s_old = self.tables[receiver].marginal(sep)
        dead = s_old <= 0.0
        if np.any(dead & (s_new > _SUPPORT_EPS)):
            raise PropagationSupportError(
                "separator gained mass where the receiving table has none"
            )
        table = self.tables[receiver]
        ratio = _ratio(s_new, s_old)
        full = table.cells.reshape(_shape(table.variables))
        full *= _broadcast(sep, ratio, table.variables)
        table.normalize()

    def recalibrate(self) -> None:
        """Restore exact calibration after per-table edits that kept the
        tables consistent up to floating-point drift."""
        if self.tables:
            self.propagate_from(0)
            self.assert_calibrated(1e-9)

    def assert_calibrated(self, tol: float = 1e-9) -> None:
        for (i, j), sep in zip(self.tree.tree_edges, self.tree.separators):
            a = self.tables[i].marginal(sep)
            b = self.tables[j].marginal(sep)
            if np.max(np.abs(a - b)) > tol:
                raise InternalError(
                    f"separator marginals of H{i + 1} and H{j + 1} disagree"
                )

    # -- queries ------------------------------------------------------------

    def query_sentence(self, sentence: Sentence) -> float:
        """Probability of the sentence under the implied joint."""
        needed = variables_of(sentence)
        if not needed:
            flat = sentence_mask(sentence, ())
            return float(flat[0])
        hosts = [h for h in self.tree.hyperedges if needed <= h.var_set]
        if hosts:
            host = min(hosts, key=lambda h: (h.table_size, h.index))
            return self.tables[host.index].sentence_mass(sentence)
        join_vars, join_cells = self._join_subtree(needed)
        mask = sentence_mask(sentence, join_vars)
        return float(np.clip(join_cells.reshape(-1)[mask].sum(), 0.0, 1.0))

    def conditional(self, conclusion: Sentence, premise: Sentence) -> float:
        """P(conclusion | premise); premise mass must be positive."""
        if isinstance(premise, Taut):
            return self.query_sentence(conclusion)
        p_joint = self.query_sentence(premise & conclusion)
        p_prem = self.query_sentence(premise)
        if p_prem <= 0.0:
            raise UndefinedConditionalError(
                "conditional undefined: premise has probability zero",
                premise=premise,
            )
        return float(np.clip(p_joint / p_prem, 0.0, 1.0))

    def variable_marginal(self, variable: Variable) -> np.ndarray:
        hosts = [h for h in self.tree.hyperedges if variable in h.var_set]
        if not hosts:
            raise SchemaError(f"variable {variable.name!r} not in any hyperedge")
        host = min(hosts, key=lambda h: (h.table_size, h.index))
        return self.tables[host.index].marginal((variable,))

    def covering_subtree(self, needed: set[Variable]) -> set[int]:
        """Connected hyperedge set covering all needed variables.

        Union of tree paths between per-variable host hyperedges, then
        redundant leaves are pruned (dropping a leaf whose needed
        variables appear elsewhere keeps both coverage and the implied
        marginal).
        """
        terminals = {min(self.tree.edges_containing(v)) for v in needed}
        base = min(terminals)
        nodes: set[int] = set()
        for t in terminals:
            nodes |= set(self._tree_path(base, t))
        while len(nodes) > 1:
            removable = None
            for node in sorted(nodes):
                degree = sum(1 for nb in self.tree.neighbors[node] if nb in nodes)
                if degree > 1:
                    continue
                others = {
                    v
                    for other in nodes
                    if other != node
                    for v in self.tree.hyperedges[other].var_set
                }
                if needed <= others:
                    removable = node
                    break
            if removable is None:
                break
            nodes.discard(removable)
        return nodes

    def _tree_path(self, start: int, goal: int) -> list[int]:
        parent: dict[int, int] = {start: start}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for nb in self.tree.neighbors[node]:
                if nb not in parent:
                    parent[nb] = node
                    queue.append(nb)
        path = [goal]
        while path[-1] != start:
            path.append(parent[path[-1]])
        return path

    def _join_subtree(
        self, needed: set[Variable]
    ) -> tuple[tuple[Variable, ...], np.ndarray]:
        """Join the covering subtree's tables into one explicit table."""
        return self.join_nodes(self.covering_subtree(needed))

    def join_nodes(
        self, nodes: set[int]
    ) -> tuple[tuple[Variable, ...], np.ndarray]:
        """Product of the node tables over a connected node set, divided by
        their separators: the joint marginal over the nodes' variables."""
        join_vars = tuple(
            v
            for v in self.variables
            if any(v in self.tree.hyperedges[n].var_set for n in nodes)
        )
        if world_count(join_vars) > ORACLE_WORLD_CAP:
            raise CapacityError(
                f"query spans {len(join_vars)} variables; joined table too large"
            )
        root = min(nodes)
        cells = np.ones(_shape(join_vars))
        cells *= _broadcast(
            self.tables[root].variables,
            self.tables[root].cells.reshape(_shape(self.tables[root].variables)),
            join_vars,
        )
        visited = {root}
        queue = deque([root])
        while queue:
            sender = queue.popleft()
            for child in self.tree.neighbors[sender]:
                if child not in nodes or child in visited:
                    continue
                visited.add(child)
                queue.append(child)
                sep = self.tree.separator_of(sender, child)
                child_table = self.tables[child]
                child_full = child_table.cells.reshape(_shape(child_table.variables))
                sep_marg = child_table.marginal(sep).reshape(_shape(sep))
                quotient = np.divide(
                    child_full,
                    _broadcast(sep, sep_marg, child_table.variables),
                    out=np.zeros_like(child_full),
                    where=_broadcast(sep, sep_marg > 0, child_table.variables),
                )
                cells *= _broadcast(child_table.variables, quotient, join_vars)
        return join_vars, cells

    def contract_nodes(self, group: set[int]) -> "FactoredDistribution":
        """New distribution with a connected node group merged into one
        hyperedge carrying the group's joined table.

        Edges inside the group vanish; edges to the outside keep their
        endpoints (the merged node inherits them) and their separators,
        so the running-intersection property survives the contraction.
        """
        group = frozenset(group)
        join_vars, join_cells = self.join_nodes(group)
        merged_table = CliqueTable(join_vars, join_cells.reshape(-1))
        merged_table.normalize()

        tokens: list[object] = []
        for i in range(len(self.tree.hyperedges)):
            if i in group:
                if "merged" not in tokens:
                    tokens.append("merged")
            else:
                tokens.append(i)
        mapping: dict[int, int] = {}
        merged_index = tokens.index("merged")
        for new_index, token in enumerate(tokens):
            if token != "merged":
                mapping[token] = new_index
        for g in group:
            mapping[g] = merged_index

        hyperedges = tuple(
            Hyperedge(new_index, join_vars if token == "merged" else self.tree.hyperedges[token].variables)
            for new_index, token in enumerate(tokens)
        )
        edges = sorted(
            {
                (min(mapping[i], mapping[j]), max(mapping[i], mapping[j]))
                for i, j in self.tree.tree_edges
                if mapping[i] != mapping[j]
            }
        )
        decl = {v: k for k, v in enumerate(self.variables)}
        separators = tuple(
            tuple(sorted(hyperedges[i].var_set & hyperedges[j].var_set, key=decl.__getitem__))
            for i, j in edges
        )
        tree = Hypertree(hyperedges, tuple(edges), separators, ())
        tables = [
            merged_table if token == "merged" else self.tables[token].copy()
            for token in tokens
        ]
        return FactoredDistribution(tree, self.variables, tables)

    # -- explicit joint ------------------------------------------------------

    def to_explicit_joint(self, cap: int = ORACLE_WORLD_CAP) -> JointTable:
        """Materialize the implied joint; only for small universes."""
        n = world_count(self.variables)
        if n > cap:
            raise CapacityError(f"{n} worlds exceed the explicit-joint cap of {cap}")
        _vars, cells = self._join_subtree(set(self.variables))
        table = JointTable(self.variables, cells.reshape(-1))
        return table.normalize()


# ---------------------------------------------------------------------------
# Explicit-joint reference solver


@dataclass
class OracleReport:
    status: str  # converged | inconsistent | sweep-limit
    sweeps: int
    residuals: dict[str, float]
    offenders: tuple[str, ...] = ()


def _joint_blocks(table: JointTable, rule: Rule) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    prem = sentence_mask(rule.premise, table.variables)
    conc = sentence_mask(rule.conclusion, table.variables)
    return ~prem, prem & ~conc, prem & conc


def _joint_residuals(table: JointTable, rules: Sequence[Rule]) -> dict[str, float]:
    out = {}
    for rule in rules:
        prem = sentence_probability(table, rule.premise)
        if prem <= 0.0:
            out[rule.id] = 1.0  # undefined conditional counts as maximal error
            continue
        achieved = conditional_probability(table, rule.conclusion, rule.premise)
        out[rule.id] = abs(achieved - rule.target)
    return out


def oracle_project(
    p0: JointTable,
    rules: Sequence[Rule],
    tolerance: float = 1e-8,
    max_sweeps: int = 1000,
) -> tuple[JointTable, OracleReport]:
    """Reference solver on the explicit joint, no hypertree involved.

    Applies the same single-rule block updates cyclically until every
    rule's conditional matches its target within tolerance.
    """
    table = p0.copy()
    if not rules:
        return table, OracleReport("converged", 0, {})

    residuals = _joint_residuals(table, rules)
    if max(residuals.values()) <= tolerance:
        return table, OracleReport("converged", 0, residuals)

    plateau = PlateauDetector()
    for sweep in range(1, max_sweeps + 1):
        for rule in rules:
            blocks = _joint_blocks(table, rule)
            b0, b10, b11 = (float(table.cells[b].sum()) for b in blocks)
            try:
                factors, _inc = rule_update(rule, m11=b11, m10=b10, m0=b0)
            except InfeasibleRuleError:
                residuals = _joint_residuals(table, rules)
                return table, OracleReport(
                    "inconsistent", sweep, residuals, offenders=(rule.id,)
                )
            for mask, factor in zip(
                blocks, (factors.outside, factors.conc_false, factors.conc_true)
            ):
                table.cells[mask] *= factor
            table.normalize()
        residuals = _joint_residuals(table, rules)
        worst = max(residuals.values())
        if worst <= tolerance:
            return table, OracleReport("converged", sweep, residuals)
        if plateau.observe(worst):
            cutoff = max(tolerance, worst * 0.5)
            offenders = tuple(r for r, v in residuals.items() if v >= cutoff)
            return table, OracleReport("inconsistent", sweep, residuals, offenders)
    return table, OracleReport("sweep-limit", max_sweeps, residuals)
