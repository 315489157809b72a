"""Independent reference computations the tests compare against.

Everything here deliberately avoids the package's own evaluation paths:
sentences are evaluated by naive set algebra over enumerated value
dictionaries, optimization goes through scipy, chordality through
exhaustive cycle search. Slow and simple on purpose.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import optimize

from maxentkb.model import And, Atom, Comparator, Not, Or, Taut


# ---------------------------------------------------------------------------
# Set-algebra sentence semantics


def all_value_dicts(variables) -> list[dict[str, str]]:
    """Every world as a name->value dict, same order as enumerate_worlds."""
    names = [v.name for v in variables]
    rows = itertools.product(*[v.values for v in variables])
    return [dict(zip(names, row)) for row in rows]


def atom_holds(atom: Atom, world: dict[str, str]) -> bool:
    value = world[atom.variable.name]
    domain = list(atom.variable.values)
    cmp = atom.comparator
    if cmp is Comparator.EQ:
        return value == atom.operand
    if cmp is Comparator.NEQ:
        return value != atom.operand
    if cmp is Comparator.LT:
        return domain.index(value) < domain.index(atom.operand)
    if cmp is Comparator.GT:
        return domain.index(value) > domain.index(atom.operand)
    if cmp is Comparator.IN:
        return value in atom.operand
    if cmp is Comparator.NOTIN:
        return value not in atom.operand
    raise AssertionError(cmp)


def satisfying_set(sentence, worlds: list[dict[str, str]]) -> set[int]:
    """Indices of the worlds satisfying the sentence, by set algebra."""
    everything = set(range(len(worlds)))
    if isinstance(sentence, Taut):
        return everything
    if isinstance(sentence, Atom):
        return {i for i, w in enumerate(worlds) if atom_holds(sentence, w)}
    if isinstance(sentence, Not):
        return everything - satisfying_set(sentence.operand, worlds)
    if isinstance(sentence, And):
        return satisfying_set(sentence.left, worlds) & satisfying_set(
            sentence.right, worlds
        )
    if isinstance(sentence, Or):
        return satisfying_set(sentence.left, worlds) | satisfying_set(
            sentence.right, worlds
        )
    raise AssertionError(sentence)


# ---------------------------------------------------------------------------
# Minimum-relative-entropy projection via scipy


def scipy_premise_posterior(m11: float, m10: float, m0: float, x: float) -> float:
    """Optimal posterior premise mass by direct 1-D minimization.

    Parameterize the projected distribution by the premise mass a: the
    conditional constraint forces the block masses (1-a, (1-x)a, xa),
    and within blocks relative entropy is minimized by uniform scaling.
    """

    def objective(a: float) -> float:
        total = 0.0
        for new, old in ((1 - a, m0), ((1 - x) * a, m10), (x * a, m11)):
            if new > 0:
                if old <= 0:
                    return math.inf
                total += new * math.log2(new / old)
        return total

    result = optimize.minimize_scalar(
        objective, bounds=(1e-12, 1 - 1e-12), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(result.x)


def scipy_project_joint(
    p0: np.ndarray, premise_mask: np.ndarray, conclusion_mask: np.ndarray, x: float
) -> np.ndarray:
    """Full SLSQP projection of one conditional constraint on a joint."""
    n = p0.size

    def objective(p):
        p = np.maximum(p, 1e-300)
        return float(np.sum(p * np.log2(p / p0)))

    constraints = [
        {"type": "eq", "fun": lambda p: p.sum() - 1.0},
        {
            "type": "eq",
            "fun": lambda p: p[premise_mask & conclusion_mask].sum()
            - x * p[premise_mask].sum(),
        },
    ]
    result = optimize.minimize(
        objective,
        p0.copy(),
        method="SLSQP",
        bounds=[(0.0, 1.0)] * n,
        constraints=constraints,
        options={"maxiter": 500, "ftol": 1e-14},
    )
    assert result.success, result.message
    return np.asarray(result.x)


# ---------------------------------------------------------------------------
# Graph brute force


def is_chordal_bruteforce(vertex_count: int, edges: set[frozenset[int]]) -> bool:
    """No induced cycle of length >= 4; exhaustive over vertex subsets."""
    adjacency = {i: set() for i in range(vertex_count)}
    for edge in edges:
        a, b = tuple(edge)
        adjacency[a].add(b)
        adjacency[b].add(a)
    vertices = list(range(vertex_count))
    for size in range(4, vertex_count + 1):
        for subset in itertools.combinations(vertices, size):
            inside = set(subset)
            degrees = {v: len(adjacency[v] & inside) for v in subset}
            if any(d != 2 for d in degrees.values()):
                continue
            # connected 2-regular induced subgraph = induced cycle
            seen = {subset[0]}
            stack = [subset[0]]
            while stack:
                v = stack.pop()
                for w in adjacency[v] & inside:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            if len(seen) == size:
                return False
    return True


def minimal_fill_bruteforce(vertex_count: int, edges: set[frozenset[int]]) -> int:
    """Smallest number of added edges making the graph chordal."""
    complement = [
        frozenset((a, b))
        for a, b in itertools.combinations(range(vertex_count), 2)
        if frozenset((a, b)) not in edges
    ]
    for k in range(len(complement) + 1):
        for extra in itertools.combinations(complement, k):
            if is_chordal_bruteforce(vertex_count, edges | set(extra)):
                return k
    raise AssertionError("complete graph is always chordal")
