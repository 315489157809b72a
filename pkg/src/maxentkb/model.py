"""Discrete variables, worlds, propositional sentences, and explicit joint tables.

A *world* is one complete assignment of values to all variables of a
knowledge base. Worlds are indexed in mixed-radix order with the
last-declared variable varying fastest, which matches C-order flattening
of an array shaped by the domain sizes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    CapacityError,
    KindError,
    OutOfRangeError,
    SchemaError,
    UndefinedConditionalError,
)

BOOLEAN_VALUES = ("f", "t")

#: Normalized tables must sum to 1 within this tolerance.
NORMALIZATION_TOL = 1e-12

#: enumerate_worlds refuses universes larger than this.
WORLD_COUNT_LIMIT = 2**63 - 1


class Kind(enum.Enum):
    BOOLEAN = "boolean"
    NOMINAL = "nominal"
    ORDINAL = "ordinal"


@dataclass(frozen=True)
class Variable:
    """A named discrete variable with an ordered, finite domain."""

    name: str
    kind: Kind
    values: tuple[str, ...]

    def __post_init__(self):
        if not self.values:
            raise SchemaError(f"variable {self.name!r} has an empty domain")
        if len(set(self.values)) != len(self.values):
            raise SchemaError(f"variable {self.name!r} has duplicate values")
        if self.kind is Kind.BOOLEAN and self.values != BOOLEAN_VALUES:
            raise SchemaError(
                f"boolean variable {self.name!r} must have values {BOOLEAN_VALUES}"
            )
        if self.kind is Kind.ORDINAL and len(self.values) < 2:
            raise SchemaError(f"ordinal variable {self.name!r} needs at least 2 values")

    @property
    def size(self) -> int:
        return len(self.values)

    def index_of(self, value: str) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise SchemaError(
                f"{value!r} is not a value of variable {self.name!r}"
            ) from None


def boolean(name: str) -> Variable:
    return Variable(name, Kind.BOOLEAN, BOOLEAN_VALUES)


def nominal(name: str, values: Sequence[str]) -> Variable:
    return Variable(name, Kind.NOMINAL, tuple(values))


def ordinal(name: str, values: Sequence[str]) -> Variable:
    return Variable(name, Kind.ORDINAL, tuple(values))


class Comparator(enum.Enum):
    EQ = "="
    NEQ = "<>"
    LT = "<"
    GT = ">"
    IN = "in"
    NOTIN = "notin"


class Sentence:
    """Base class of the propositional AST.

    Supports ``&``, ``|`` and ``~`` for concise construction in code;
    the concrete text syntax lives in the parser module.
    """

    __slots__ = ()

    def __and__(self, other: "Sentence") -> "And":
        return And(self, other)

    def __or__(self, other: "Sentence") -> "Or":
        return Or(self, other)

    def __invert__(self) -> "Not":
        return Not(self)


@dataclass(frozen=True)
class Taut(Sentence):
    """The tautology marker: true in every world."""


TAUT = Taut()


@dataclass(frozen=True)
class Atom(Sentence):
    """One comparison of a variable against a value or value list.

    LT/GT compare positions in an ordinal domain; IN/NOTIN test list
    membership on non-boolean variables. NEQ is allowed on booleans
    (it is just negation).
    """

    variable: Variable
    comparator: Comparator
    operand: str | tuple[str, ...]

    def __post_init__(self):
        cmp, var = self.comparator, self.variable
        if cmp in (Comparator.IN, Comparator.NOTIN):
            if var.kind is Kind.BOOLEAN:
                raise KindError(f"{cmp.value!r} is not allowed on boolean variable {var.name!r}")
            if not isinstance(self.operand, tuple) or not self.operand:
                raise SchemaError(f"{cmp.value!r} on {var.name!r} needs a non-empty value list")
            for v in self.operand:
                var.index_of(v)
        else:
            if not isinstance(self.operand, str):
                raise SchemaError(f"comparator {cmp.value!r} on {var.name!r} takes a single value")
            if cmp in (Comparator.LT, Comparator.GT) and var.kind is not Kind.ORDINAL:
                raise KindError(
                    f"{cmp.value!r} needs an ordinal variable, {var.name!r} is {var.kind.value}"
                )
            var.index_of(self.operand)


@dataclass(frozen=True)
class Not(Sentence):
    operand: Sentence


@dataclass(frozen=True)
class And(Sentence):
    left: Sentence
    right: Sentence


@dataclass(frozen=True)
class Or(Sentence):
    left: Sentence
    right: Sentence


def variables_of(sentence: Sentence) -> set[Variable]:
    """The exact set of variables named by atoms of the sentence."""
    out: set[Variable] = set()
    stack = [sentence]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            out.add(node.variable)
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Taut):
            pass
        else:
            raise SchemaError(f"unknown sentence node {node!r}")
    return out


class Mode(enum.Enum):
    FLOAT = "float"
    GROUND = "ground"


@dataclass(frozen=True)
class Rule:
    """A desired conditional probability: premise => conclusion with target x.

    A fact is a rule whose premise is the tautology. In ``float`` mode the
    premise probability may move when the rule is applied; ``ground`` mode
    pins it at its prior value.
    """

    id: str
    premise: Sentence
    conclusion: Sentence
    target: float
    mode: Mode = Mode.FLOAT

    def __post_init__(self):
        if not 0.0 <= self.target <= 1.0:
            raise OutOfRangeError(f"rule {self.id!r}: probability {self.target} outside [0, 1]")
        if isinstance(self.conclusion, Taut):
            raise SchemaError(f"rule {self.id!r}: conclusion may not be the tautology")
        if not variables_of(self.conclusion):
            raise SchemaError(f"rule {self.id!r}: conclusion names no variables")
        if not isinstance(self.premise, Taut) and not variables_of(self.premise):
            raise SchemaError(f"rule {self.id!r}: premise names no variables (use '*')")

    @property
    def is_fact(self) -> bool:
        return isinstance(self.premise, Taut)

    def cluster(self) -> frozenset[Variable]:
        return frozenset(variables_of(self.premise) | variables_of(self.conclusion))


# ---------------------------------------------------------------------------
# Worlds


def world_count(variables: Sequence[Variable]) -> int:
    return math.prod(v.size for v in variables)


@dataclass(frozen=True)
class World:
    """One complete assignment, stored as a mixed-radix index."""

    variables: tuple[Variable, ...]
    index: int

    def value_indices(self) -> tuple[int, ...]:
        digits = []
        rem = self.index
        for var in reversed(self.variables):
            rem, d = divmod(rem, var.size)
            digits.append(d)
        return tuple(reversed(digits))

    def values(self) -> tuple[str, ...]:
        return tuple(v.values[i] for v, i in zip(self.variables, self.value_indices()))

    def value_of(self, variable: Variable) -> str:
        try:
            pos = self.variables.index(variable)
        except ValueError:
            raise SchemaError(f"variable {variable.name!r} not present in this world") from None
        return self.values()[pos]


def enumerate_worlds(variables: Sequence[Variable]) -> Iterator[World]:
    """Yield every complete assignment once, last-declared variable fastest."""
    variables = tuple(variables)
    count = world_count(variables)
    if count > WORLD_COUNT_LIMIT:
        raise CapacityError(f"{count} worlds exceed the machine integer range")
    for i in range(count):
        yield World(variables, i)


# ---------------------------------------------------------------------------
# Sentence evaluation


def _atom_truth(atom: Atom) -> np.ndarray:
    """Truth of the atom per domain value, as a boolean vector."""
    var = atom.variable
    cmp = atom.comparator
    if cmp is Comparator.EQ:
        out = np.zeros(var.size, dtype=bool)
        out[var.index_of(atom.operand)] = True
        return out
    if cmp is Comparator.NEQ:
        out = np.ones(var.size, dtype=bool)
        out[var.index_of(atom.operand)] = False
        return out
    if cmp is Comparator.LT:
        return np.arange(var.size) < var.index_of(atom.operand)
    if cmp is Comparator.GT:
        return np.arange(var.size) > var.index_of(atom.operand)
    members = np.zeros(var.size, dtype=bool)
    for v in atom.operand:
        members[var.index_of(v)] = True
    if cmp is Comparator.IN:
        return members
    return ~members


def satisfies(world: World, sentence: Sentence) -> bool:
    """Standard propositional semantics of one sentence in one world."""
    if isinstance(sentence, Taut):
        return True
    if isinstance(sentence, Atom):
        pos = world.value_indices()[_position_of(world.variables, sentence.variable)]
        return bool(_atom_truth(sentence)[pos])
    if isinstance(sentence, Not):
        return not satisfies(world, sentence.operand)
    if isinstance(sentence, And):
        return satisfies(world, sentence.left) and satisfies(world, sentence.right)
    if isinstance(sentence, Or):
        return satisfies(world, sentence.left) or satisfies(world, sentence.right)
    raise SchemaError(f"unknown sentence node {sentence!r}")


def _position_of(variables: tuple[Variable, ...], variable: Variable) -> int:
    try:
        return variables.index(variable)
    except ValueError:
        raise SchemaError(f"variable {variable.name!r} not in table schema") from None


def sentence_mask(sentence: Sentence, variables: Sequence[Variable]) -> np.ndarray:
    """Boolean mask over the world space of `variables`, flat C-order."""
    variables = tuple(variables)
    shape = tuple(v.size for v in variables)
    return np.ascontiguousarray(_shaped_mask(sentence, variables, shape)).reshape(-1)


def _shaped_mask(sentence, variables, shape) -> np.ndarray:
    if isinstance(sentence, Taut):
        return np.ones(shape, dtype=bool)
    if isinstance(sentence, Atom):
        axis = _position_of(variables, sentence.variable)
        vec = _atom_truth(sentence)
        view = [1] * len(shape)
        view[axis] = shape[axis]
        return np.broadcast_to(vec.reshape(view), shape)
    if isinstance(sentence, Not):
        return ~_shaped_mask(sentence.operand, variables, shape)
    if isinstance(sentence, And):
        return _shaped_mask(sentence.left, variables, shape) & _shaped_mask(
            sentence.right, variables, shape
        )
    if isinstance(sentence, Or):
        return _shaped_mask(sentence.left, variables, shape) | _shaped_mask(
            sentence.right, variables, shape
        )
    raise SchemaError(f"unknown sentence node {sentence!r}")


# ---------------------------------------------------------------------------
# Explicit joint tables


@dataclass
class JointTable:
    """An explicit distribution over the full world space.

    Only usable at desk scale; the engine module keeps large distributions
    factored and uses this type for oracles and small queries.
    """

    variables: tuple[Variable, ...]
    cells: np.ndarray

    def __post_init__(self):
        self.variables = tuple(self.variables)
        self.cells = np.asarray(self.cells, dtype=np.float64).reshape(-1)
        expected = world_count(self.variables)
        if self.cells.size != expected:
            raise SchemaError(
                f"table has {self.cells.size} cells, schema needs {expected}"
            )
        if np.any(self.cells < 0):
            raise SchemaError("joint table has negative cells")

    @classmethod
    def uniform(cls, variables: Sequence[Variable]) -> "JointTable":
        n = world_count(tuple(variables))
        return cls(tuple(variables), np.full(n, 1.0 / n))

    def copy(self) -> "JointTable":
        return JointTable(self.variables, self.cells.copy())

    def normalize(self) -> "JointTable":
        total = float(self.cells.sum())
        if total <= 0.0:
            raise SchemaError("cannot normalize a zero-mass table")
        self.cells /= total
        return self


def sentence_probability(table: JointTable, sentence: Sentence) -> float:
    """Total mass of the worlds satisfying the sentence."""
    mask = sentence_mask(sentence, table.variables)
    return float(np.clip(table.cells[mask].sum(), 0.0, 1.0))


def conditional_probability(
    table: JointTable, conclusion: Sentence, premise: Sentence
) -> float:
    """P(conclusion | premise) under the table."""
    mp = sentence_mask(premise, table.variables)
    denom = float(table.cells[mp].sum())
    if denom <= 0.0:
        raise UndefinedConditionalError(
            "conditional undefined: premise has probability zero", premise=premise
        )
    mc = sentence_mask(conclusion, table.variables)
    return float(np.clip(table.cells[mp & mc].sum() / denom, 0.0, 1.0))
