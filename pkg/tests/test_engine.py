"""Factored distribution: calibration, propagation, joins, explicit joints."""

from __future__ import annotations

import random

import numpy as np
import pytest

from maxentkb.engine import (
    CliqueTable,
    FactoredDistribution,
    OracleReport,
    oracle_project,
)
from maxentkb.errors import (
    CapacityError,
    InternalError,
    PropagationSupportError,
    SchemaError,
    UndefinedConditionalError,
)
from maxentkb.hypertree import build_from_rules
from maxentkb.model import (
    Atom,
    Comparator,
    JointTable,
    Rule,
    TAUT,
    boolean,
    enumerate_worlds,
    sentence_mask,
    sentence_probability,
)

from .conftest import random_sentence

A, B, C, D = (boolean(n) for n in "ABCD")


def atom(v, value="t"):
    return Atom(v, Comparator.EQ, value)


def chain_distribution():
    """Uniform factored state over cliques {A,B} and {B,C}."""
    rules = (
        Rule("R1", atom(A), atom(B), 0.5),
        Rule("R2", atom(B), atom(C), 0.5),
    )
    tree = build_from_rules((A, B, C), rules)
    return FactoredDistribution.init_uniform(tree, (A, B, C))


def restricted_index(world, variables):
    """Mixed-radix index of the world restricted to `variables`."""
    idx = 0
    for v in variables:
        idx = idx * v.size + v.values.index(world.value_of(v))
    return idx


def explicit_product(dist: FactoredDistribution) -> np.ndarray:
    """Independent joint: product of tables over product of separators,
    evaluated world by world with no engine join code."""
    worlds = list(enumerate_worlds(dist.variables))
    out = np.zeros(len(worlds))
    sep_marginals = [
        dist.tables[i].marginal(sep)
        for (i, _j), sep in zip(dist.tree.tree_edges, dist.tree.separators)
    ]
    for w, world in enumerate(worlds):
        val = 1.0
        for edge, table in zip(dist.tree.hyperedges, dist.tables):
            val *= table.cells[restricted_index(world, edge.variables)]
        for sep, marg in zip(dist.tree.separators, sep_marginals):
            denom = marg[restricted_index(world, sep)]
            if denom <= 0.0:
                val = 0.0
                break
            val /= denom
        out[w] = val
    total = out.sum()
    return out / total if total > 0 else out


class TestCliqueTable:
    def test_uniform(self):
        t = CliqueTable.uniform((A, B))
        assert t.cells.shape == (4,)
        assert np.allclose(t.cells, 0.25)

    def test_negative_cells_rejected(self):
        with pytest.raises(SchemaError):
            CliqueTable((A,), np.array([0.5, -0.1]))

    def test_wrong_size_rejected(self):
        with pytest.raises(SchemaError):
            CliqueTable((A, B), np.array([0.5, 0.5]))

    def test_normalize_zero_mass(self):
        t = CliqueTable((A,), np.array([1.0, 1.0]))
        t.cells[:] = 0.0
        with pytest.raises(SchemaError):
            t.normalize()

    def test_marginal_values(self):
        t = CliqueTable((A, B), np.array([0.1, 0.2, 0.3, 0.4]))
        assert np.allclose(t.marginal((A,)), [0.3, 0.7])
        assert np.allclose(t.marginal((B,)), [0.4, 0.6])
        assert np.allclose(t.marginal(()), [1.0])
        assert np.allclose(t.marginal((A, B)), t.cells)

    def test_marginal_requires_table_order(self):
        t = CliqueTable.uniform((A, B))
        with pytest.raises(InternalError):
            t.marginal((B, A))

    def test_sentence_mass(self):
        t = CliqueTable((A, B), np.array([0.1, 0.2, 0.3, 0.4]))
        assert t.sentence_mass(atom(A)) == pytest.approx(0.7)
        assert t.sentence_mass(atom(A) & atom(B)) == pytest.approx(0.4)


class TestPropagation:
    def test_uniform_is_calibrated(self):
        dist = chain_distribution()
        dist.assert_calibrated()

    def test_chain_hand_example(self):
        # force P(B=t)=0.8 in the left table; the right table must follow
        dist = chain_distribution()
        left = dist.tables[0]
        assert left.variables == (A, B)
        left.cells[:] = [0.1, 0.4, 0.1, 0.4]
        dist.propagate_from(0)
        dist.assert_calibrated()
        assert np.allclose(dist.tables[1].cells, [0.1, 0.1, 0.4, 0.4])

    def test_propagation_matches_product_joint(self):
        rng = np.random.default_rng(5)
        dist = chain_distribution()
        dist.tables[0].cells[:] = rng.dirichlet(np.ones(4))
        dist.propagate_from(0)
        dist.assert_calibrated()
        joint = explicit_product(dist)
        package_joint = dist.to_explicit_joint()
        assert np.allclose(package_joint.cells, joint, atol=1e-12)

    def test_support_error_when_receiver_has_no_mass(self):
        dist = chain_distribution()
        dist.tables[0].cells[:] = [0.5, 0.0, 0.5, 0.0]  # kill B=t on the left
        dist.propagate_from(0)
        dist.tables[0].cells[:] = 0.25  # resurrect B=t and push again
        with pytest.raises(PropagationSupportError):
            dist.propagate_from(0)

    def test_zero_over_zero_scales_to_zero(self):
        dist = chain_distribution()
        dist.tables[0].cells[:] = [0.5, 0.0, 0.5, 0.0]
        dist.propagate_from(0)
        assert np.allclose(dist.tables[1].cells, [0.5, 0.5, 0.0, 0.0])
        dist.tables[0].cells[:] = [0.4, 0.0, 0.6, 0.0]
        dist.propagate_from(0)  # B=t stays extinct on both sides, no error
        dist.assert_calibrated()

    def test_assert_calibrated_detects_desync(self):
        dist = chain_distribution()
        dist.tables[1].cells[:] = [0.1, 0.1, 0.4, 0.4]  # B marginal now 0.2/0.8
        with pytest.raises(InternalError):
            dist.assert_calibrated()

    def test_recalibrate_repairs_desync(self):
        dist = chain_distribution()
        dist.tables[1].cells[:] = [0.1, 0.1, 0.4, 0.4]
        dist.recalibrate()
        dist.assert_calibrated()


class TestQueries:
    def test_taut_probability_one(self):
        dist = chain_distribution()
        assert dist.query_sentence(TAUT) == 1.0

    def test_host_query(self):
        dist = chain_distribution()
        dist.tables[0].cells[:] = [0.1, 0.4, 0.1, 0.4]
        dist.propagate_from(0)
        assert dist.query_sentence(atom(B)) == pytest.approx(0.8)
        assert dist.query_sentence(atom(A) & atom(B)) == pytest.approx(0.4)

    def test_join_query_spans_cliques(self):
        rng = np.random.default_rng(11)
        dist = chain_distribution()
        dist.tables[0].cells[:] = rng.dirichlet(np.ones(4))
        dist.propagate_from(0)
        dist.tables[1].cells *= np.array([1.0, 3.0, 2.0, 0.5])
        dist.tables[1].normalize()
        dist.propagate_from(1)
        joint = explicit_product(dist)
        worlds_mask = sentence_mask(atom(A) & atom(C), (A, B, C))
        expected = joint[worlds_mask].sum()
        assert dist.query_sentence(atom(A) & atom(C)) == pytest.approx(expected)

    def test_random_sentences_match_product_joint(self):
        srng = random.Random(23)
        nrng = np.random.default_rng(23)
        dist = chain_distribution()
        dist.tables[0].cells[:] = nrng.dirichlet(np.ones(4)) + 0.01
        dist.tables[0].normalize()
        dist.propagate_from(0)
        joint = explicit_product(dist)
        for _ in range(40):
            s = random_sentence(srng, [A, B, C], 3)
            mask = sentence_mask(s, (A, B, C))
            assert dist.query_sentence(s) == pytest.approx(
                joint[mask].sum(), abs=1e-10
            )

    def test_conditional(self):
        dist = chain_distribution()
        dist.tables[0].cells[:] = [0.1, 0.4, 0.1, 0.4]
        dist.propagate_from(0)
        assert dist.conditional(atom(B), atom(A)) == pytest.approx(0.8)

    def test_conditional_zero_premise(self):
        dist = chain_distribution()
        dist.tables[0].cells[:] = [0.5, 0.0, 0.5, 0.0]
        dist.propagate_from(0)
        with pytest.raises(UndefinedConditionalError):
            dist.conditional(atom(C), atom(B))

    def test_variable_marginal_consistent_across_hosts(self):
        dist = chain_distribution()
        dist.tables[0].cells[:] = [0.05, 0.45, 0.15, 0.35]
        dist.propagate_from(0)
        from_left = dist.tables[0].marginal((B,))
        from_right = dist.tables[1].marginal((B,))
        assert np.allclose(from_left, from_right)
        assert np.allclose(dist.variable_marginal(B), from_left)


class TestCoveringSubtree:
    def four_clique_chain(self):
        rules = (
            Rule("R1", atom(A), atom(B), 0.5),
            Rule("R2", atom(B), atom(C), 0.5),
            Rule("R3", atom(C), atom(D), 0.5),
        )
        tree = build_from_rules((A, B, C, D), rules)
        return FactoredDistribution.init_uniform(tree, (A, B, C, D))

    def test_end_to_end_needs_whole_chain(self):
        dist = self.four_clique_chain()
        assert dist.covering_subtree({A, D}) == {0, 1, 2}

    def test_single_host(self):
        dist = self.four_clique_chain()
        assert dist.covering_subtree({B}) == {0}
        assert dist.covering_subtree({A, B}) == {0}

    def test_subtree_is_connected_and_covers(self):
        dist = self.four_clique_chain()
        for needed in ({A, C}, {B, D}, {A, B, C, D}):
            nodes = dist.covering_subtree(needed)
            covered = {v for n in nodes for v in dist.tree.hyperedges[n].var_set}
            assert needed <= covered


class TestContractNodes:
    def test_contraction_preserves_joint(self):
        rng = np.random.default_rng(3)
        dist = chain_distribution()
        dist.tables[0].cells[:] = rng.dirichlet(np.ones(4)) + 0.02
        dist.tables[0].normalize()
        dist.propagate_from(0)
        before = dist.to_explicit_joint().cells
        merged = dist.contract_nodes({0, 1})
        assert len(merged.tree.hyperedges) == 1
        after = merged.to_explicit_joint().cells
        assert np.allclose(before, after, atol=1e-12)

    def test_partial_contraction_keeps_outside_edges(self):
        rules = (
            Rule("R1", atom(A), atom(B), 0.5),
            Rule("R2", atom(B), atom(C), 0.5),
            Rule("R3", atom(C), atom(D), 0.5),
        )
        tree = build_from_rules((A, B, C, D), rules)
        dist = FactoredDistribution.init_uniform(tree, (A, B, C, D))
        rng = np.random.default_rng(8)
        dist.tables[1].cells[:] = rng.dirichlet(np.ones(4)) + 0.05
        dist.tables[1].normalize()
        dist.propagate_from(1)
        before = dist.to_explicit_joint().cells
        merged = dist.contract_nodes({0, 1})
        assert len(merged.tree.hyperedges) == 2
        merged.assert_calibrated()
        assert np.allclose(merged.to_explicit_joint().cells, before, atol=1e-12)

    def test_original_untouched(self):
        dist = chain_distribution()
        snapshot = [t.cells.copy() for t in dist.tables]
        dist.contract_nodes({0, 1})
        for old, table in zip(snapshot, dist.tables):
            assert np.array_equal(old, table.cells)


class TestExplicitJointCap:
    def test_cap_enforced(self):
        many = tuple(boolean(f"V{i}") for i in range(21))
        tree = build_from_rules(many, ())
        dist = FactoredDistribution.init_uniform(tree, many)
        with pytest.raises(CapacityError):
            dist.to_explicit_joint()

    def test_custom_cap(self):
        dist = chain_distribution()
        with pytest.raises(CapacityError):
            dist.to_explicit_joint(cap=4)


class TestOracleProject:
    def test_certain_implication(self):
        p0 = JointTable.uniform((A, B))
        rule = Rule("R1", atom(A), atom(B), 1.0)
        table, report = oracle_project(p0, [rule])
        assert report.status == "converged"
        assert np.allclose(table.cells, [1 / 3, 1 / 3, 0.0, 1 / 3])

    def test_fact_application(self):
        p0 = JointTable.uniform((A, B))
        rule = Rule("R1", TAUT, atom(A), 0.7)
        table, report = oracle_project(p0, [rule])
        assert report.status == "converged"
        assert sentence_probability(table, atom(A)) == pytest.approx(0.7)
        # maxent keeps B independent and uniform
        assert np.allclose(table.cells, [0.15, 0.15, 0.35, 0.35])

    def test_contradiction_is_inconsistent(self):
        p0 = JointTable.uniform((A,))
        rules = [
            Rule("R1", TAUT, atom(A), 0.9),
            Rule("R2", TAUT, atom(A), 0.1),
        ]
        table, report = oracle_project(p0, rules)
        assert report.status == "inconsistent"
        assert report.offenders
        assert np.all(np.isfinite(table.cells))

    def test_already_satisfied_needs_zero_sweeps(self):
        p0 = JointTable.uniform((A, B))
        rule = Rule("R1", TAUT, atom(A), 0.5)
        _table, report = oracle_project(p0, [rule])
        assert report.sweeps == 0
        assert report.status == "converged"

    def test_empty_rules(self):
        p0 = JointTable.uniform((A,))
        table, report = oracle_project(p0, [])
        assert report == OracleReport("converged", 0, {})
        assert np.allclose(table.cells, p0.cells)
