"""Scalar core of the single-rule minimum-relative-entropy update.

A rule ``premise => conclusion with probability x`` partitions the worlds
into three blocks: outside the premise, premise with conclusion false,
premise with conclusion true. The update rescales each block uniformly so
that the conditional hits x while staying as close as possible (in
relative entropy, measured in bits) to the previous distribution. The
whole update is determined by the three block masses, so this module is
pure scalar math shared by the factored solver and the explicit-joint
reference implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleRuleError
from .model import Mode, Rule

#: Masses at or below this count as zero support.
ZERO_MASS = 1e-14


def check_feasible(m11: float, m10: float, m0: float, x: float, rule_id: str) -> None:
    """A block that must carry probability cannot have zero prior mass."""
    if x > 0.0 and m11 <= ZERO_MASS:
        raise InfeasibleRuleError(
            f"rule {rule_id!r}: premise-and-conclusion has zero probability "
            f"but the rule demands {x}",
            rule_id=rule_id,
        )
    if x < 1.0 and m10 <= ZERO_MASS:
        raise InfeasibleRuleError(
            f"rule {rule_id!r}: premise-without-conclusion has zero probability "
            f"but the rule demands {x}",
            rule_id=rule_id,
        )


def premise_posterior_float(m11: float, m10: float, m0: float, x: float) -> float:
    """Posterior premise mass a* for a float-mode update.

    a* = A / (A + m0 * x^x * (1-x)^(1-x)) with A = m11^x * m10^(1-x),
    using the convention 0^0 = 1. The boundary targets reduce to
    a* = m11/(m11+m0) for x = 1 and a* = m10/(m10+m0) for x = 0.
    """
    if x >= 1.0:
        return m11 / (m11 + m0)
    if x <= 0.0:
        return m10 / (m10 + m0)
    a = m11**x * m10 ** (1.0 - x)
    return a / (a + m0 * x**x * (1.0 - x) ** (1.0 - x))


def premise_posterior(
    m11: float, m10: float, m0: float, x: float, mode: Mode
) -> float:
    if mode is Mode.GROUND:
        return m11 + m10  # premise mass pinned at its prior value
    return premise_posterior_float(m11, m10, m0, x)


@dataclass(frozen=True)
class BlockFactors:
    """Uniform scale factor per block; a zero-target block scales to zero."""

    outside: float  # worlds where the premise is false
    conc_false: float  # premise true, conclusion false
    conc_true: float  # premise true, conclusion true
    a_star: float


def block_factors(m11: float, m10: float, m0: float, x: float, a_star: float) -> BlockFactors:
    new0 = 1.0 - a_star
    new10 = (1.0 - x) * a_star
    new11 = x * a_star
    return BlockFactors(
        outside=new0 / m0 if new0 > 0.0 else 0.0,
        conc_false=new10 / m10 if new10 > 0.0 else 0.0,
        conc_true=new11 / m11 if new11 > 0.0 else 0.0,
        a_star=a_star,
    )


def rule_update(
    rule: Rule, m11: float, m10: float, m0: float
) -> tuple[BlockFactors, float]:
    """Feasibility check, posterior premise mass, block factors, and the
    relative-entropy increment (bits) of this single projection."""
    check_feasible(m11, m10, m0, rule.target, rule.id)
    if rule.mode is Mode.GROUND and m11 + m10 <= ZERO_MASS:
        raise InfeasibleRuleError(
            f"rule {rule.id!r}: premise has zero probability, its mass cannot "
            "be preserved while satisfying the rule",
            rule_id=rule.id,
        )
    a_star = premise_posterior(m11, m10, m0, rule.target, rule.mode)
    factors = block_factors(m11, m10, m0, rule.target, a_star)
    return factors, projection_increment(m11, m10, m0, rule.target, a_star)


def projection_increment(
    m11: float, m10: float, m0: float, x: float, a_star: float
) -> float:
    """Relative entropy (bits) of the updated against the previous state.

    Each block scales uniformly, so the sum collapses to one term per
    block: new_mass * ld(new_mass / old_mass), with empty terms dropped.
    """
    total = 0.0
    for new, old in (
        (1.0 - a_star, m0),
        ((1.0 - x) * a_star, m10),
        (x * a_star, m11),
    ):
        if new > 0.0:
            total += new * math.log2(new / old)
    return total


class PlateauDetector:
    """Flags iteration stuck above tolerance.

    Watches the max residual at sweep ends; if over a full window the
    best value fails to improve relative to the window start by more
    than a tiny fraction, the rule set is reported inconsistent. Exact
    limit cycles (contradictory rules) trip this quickly while slow
    genuine convergence keeps making relative progress.
    """

    def __init__(self, window: int = 25, min_relative_drop: float = 1e-7):
        self.window = window
        self.min_relative_drop = min_relative_drop
        self._history: list[float] = []

    def observe(self, max_residual: float) -> bool:
        """Record a sweep-end residual; True when a plateau is detected."""
        self._history.append(max_residual)
        if len(self._history) <= self.window:
            return False
        start = self._history[-self.window - 1]
        best = min(self._history[-self.window:])
        return start - best <= self.min_relative_drop * start
