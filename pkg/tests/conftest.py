"""Shared fixtures: example knowledge bases and random generators."""

from __future__ import annotations

import random

import numpy as np
import pytest

from maxentkb.model import (
    And,
    Atom,
    Comparator,
    Not,
    Or,
    Rule,
    TAUT,
    boolean,
)

IMPLICATION_KB = """\
var A : boolean
var B : boolean

rule [1.0] A => B
"""

IMPLICATION_KB_GROUND = """\
var A : boolean
var B : boolean

rule ground [1.0] A => B
"""

CONJUNCTION_KB = """\
var A : boolean
var B : boolean
var C : boolean

rule [0.9] A & B => C
"""

CONJUNCTION_KB_GROUND = """\
var A : boolean
var B : boolean
var C : boolean

rule ground [0.9] A & B => C
"""

CONTRADICTION_KB = """\
var A : boolean

rule [0.9] * => A
rule [0.1] * => A
"""


@pytest.fixture
def implication_kb() -> str:
    return IMPLICATION_KB


@pytest.fixture
def conjunction_kb() -> str:
    return CONJUNCTION_KB


# ---------------------------------------------------------------------------
# Random generators (plain `random` for structure, numpy for numbers)


def random_sentence(rng: random.Random, variables, depth: int):
    """Random sentence AST of bounded depth over the given variables."""
    if depth <= 0 or rng.random() < 0.35:
        var = rng.choice(variables)
        if var.kind.value == "boolean":
            atom = Atom(var, Comparator.EQ, rng.choice(var.values))
            return Not(atom) if rng.random() < 0.2 else atom
        roll = rng.random()
        if roll < 0.4:
            return Atom(var, Comparator.EQ, rng.choice(var.values))
        if roll < 0.6:
            return Atom(var, Comparator.NEQ, rng.choice(var.values))
        if roll < 0.8 and var.kind.value == "ordinal":
            cmp = Comparator.LT if rng.random() < 0.5 else Comparator.GT
            return Atom(var, cmp, rng.choice(var.values))
        k = rng.randint(1, len(var.values))
        subset = tuple(rng.sample(var.values, k))
        cmp = Comparator.IN if rng.random() < 0.5 else Comparator.NOTIN
        return Atom(var, cmp, subset)
    roll = rng.random()
    if roll < 0.2:
        return Not(random_sentence(rng, variables, depth - 1))
    left = random_sentence(rng, variables, depth - 1)
    right = random_sentence(rng, variables, depth - 1)
    return And(left, right) if roll < 0.6 else Or(left, right)


def random_consistent_kb(seed: int, max_vars: int = 10, max_rules: int = 6):
    """Random float rules whose targets come from one strictly positive joint.

    Returns (variables, rules). Because a single positive distribution
    satisfies every rule exactly, the set is consistent by construction.
    """
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)
    n_vars = rng.randint(2, max_vars)
    variables = tuple(boolean(f"V{i}") for i in range(n_vars))
    joint = nrng.dirichlet(np.ones(2**n_vars)) + 1e-6
    joint /= joint.sum()

    from maxentkb.model import sentence_mask

    rules = []
    n_rules = rng.randint(1, max_rules)
    attempts = 0
    while len(rules) < n_rules and attempts < 50 * n_rules:
        attempts += 1
        cluster_size = rng.randint(1, min(3, n_vars))
        cluster = rng.sample(range(n_vars), cluster_size)
        conclusion = random_sentence(rng, [variables[i] for i in cluster], 1)
        if rng.random() < 0.3:
            premise = TAUT
        else:
            prem_cluster = rng.sample(range(n_vars), rng.randint(1, min(2, n_vars)))
            premise = random_sentence(rng, [variables[i] for i in prem_cluster], 1)
        pm = sentence_mask(premise, variables)
        cm = sentence_mask(conclusion, variables)
        prem_mass = joint[pm].sum()
        if prem_mass <= 1e-9:
            continue
        target = float(joint[pm & cm].sum() / prem_mass)
        try:
            rules.append(Rule(f"R{len(rules) + 1}", premise, conclusion, target))
        except Exception:
            continue
    return variables, tuple(rules), joint


def random_rule_set(seed: int, max_vars: int = 12, max_rules: int = 8):
    """Random structural rule set (targets arbitrary); for graph-shape tests."""
    rng = random.Random(seed)
    n_vars = rng.randint(1, max_vars)
    variables = tuple(boolean(f"V{i}") for i in range(n_vars))
    rules = []
    for r in range(rng.randint(0, max_rules)):
        cluster_size = rng.randint(1, min(4, n_vars))
        cluster = [variables[i] for i in rng.sample(range(n_vars), cluster_size)]
        conclusion = random_sentence(rng, cluster, 1)
        premise = TAUT if rng.random() < 0.3 else random_sentence(rng, cluster, 1)
        try:
            rules.append(Rule(f"R{r + 1}", premise, conclusion, rng.random()))
        except Exception:
            continue
    return variables, tuple(rules)
