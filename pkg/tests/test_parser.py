"""KB text format: grammar, precedence, canonical round trips, error positions."""

from __future__ import annotations

import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxentkb.errors import (
    KbError,
    KindError,
    OutOfRangeError,
    ParseError,
    ResolutionError,
)
from maxentkb.model import (
    And,
    Atom,
    Comparator,
    Mode,
    Not,
    Or,
    TAUT,
    boolean,
    nominal,
    ordinal,
)
from maxentkb.parser import (
    KnowledgeBaseSource,
    SolverOptions,
    format_kb,
    format_rule,
    format_sentence,
    parse_fact,
    parse_kb,
    parse_rule,
)

from .conftest import random_rule_set

SCHEMA = [boolean("A"), boolean("B"), nominal("Color", ("red", "green", "blue")),
          ordinal("Size", ("small", "medium", "large"))]
A, B, COLOR, SIZE = SCHEMA


def fact(text):
    return parse_fact(text, SCHEMA)


class TestFactGrammar:
    def test_bare_boolean_means_true(self):
        assert fact("A") == Atom(A, Comparator.EQ, "t")

    def test_explicit_equality(self):
        assert fact("A = f") == Atom(A, Comparator.EQ, "f")
        assert fact("Color = blue") == Atom(COLOR, Comparator.EQ, "blue")

    def test_inequality(self):
        assert fact("Color <> red") == Atom(COLOR, Comparator.NEQ, "red")

    def test_ordinal_comparisons(self):
        assert fact("Size < large") == Atom(SIZE, Comparator.LT, "large")
        assert fact("Size > small") == Atom(SIZE, Comparator.GT, "small")

    def test_membership(self):
        assert fact("Color in {red, blue}") == Atom(COLOR, Comparator.IN, ("red", "blue"))
        assert fact("Color notin {green}") == Atom(COLOR, Comparator.NOTIN, ("green",))

    def test_in_is_contextual_not_reserved_in_values(self):
        # 'in' appears as the comparator keyword only after a variable
        with pytest.raises(KbError):
            fact("in")

    def test_not_binds_tighter_than_and(self):
        assert fact("!A & B") == And(Not(Atom(A, Comparator.EQ, "t")),
                                     Atom(B, Comparator.EQ, "t"))

    def test_and_binds_tighter_than_or(self):
        a = Atom(A, Comparator.EQ, "t")
        b = Atom(B, Comparator.EQ, "t")
        red = Atom(COLOR, Comparator.EQ, "red")
        assert fact("A | B & Color = red") == Or(a, And(b, red))

    def test_left_associativity(self):
        a = Atom(A, Comparator.EQ, "t")
        b = Atom(B, Comparator.EQ, "t")
        red = Atom(COLOR, Comparator.EQ, "red")
        assert fact("A & B & Color = red") == And(And(a, b), red)
        assert fact("A | B | Color = red") == Or(Or(a, b), red)

    def test_parentheses_override(self):
        a = Atom(A, Comparator.EQ, "t")
        b = Atom(B, Comparator.EQ, "t")
        red = Atom(COLOR, Comparator.EQ, "red")
        assert fact("(A | B) & Color = red") == And(Or(a, b), red)

    def test_double_negation_kept(self):
        assert fact("!!A") == Not(Not(Atom(A, Comparator.EQ, "t")))

    def test_star_is_taut(self):
        assert fact("*") == TAUT

    def test_bare_nominal_rejected(self):
        with pytest.raises(KindError):
            fact("Color")

    def test_ordering_on_nominal_rejected(self):
        with pytest.raises(KindError):
            fact("Color < green")

    def test_unknown_variable(self):
        with pytest.raises(ResolutionError):
            fact("Bogus = t")

    def test_unknown_value(self):
        with pytest.raises(ResolutionError):
            fact("Color = mauve")

    def test_trailing_garbage(self):
        with pytest.raises(ParseError):
            fact("A B")

    def test_error_carries_position(self):
        with pytest.raises(ResolutionError) as exc:
            parse_fact("A & Color = mauve", SCHEMA, line=4)
        assert exc.value.line == 4
        assert exc.value.col is not None and exc.value.col > 4


class TestRuleGrammar:
    def test_conditional_rule(self):
        r = parse_rule("[0.9] A => B", SCHEMA)
        assert r.premise == Atom(A, Comparator.EQ, "t")
        assert r.conclusion == Atom(B, Comparator.EQ, "t")
        assert r.target == 0.9
        assert r.mode is Mode.FLOAT

    def test_fact_shorthand(self):
        r = parse_rule("[0.25] Color = red", SCHEMA)
        assert r.is_fact
        assert r.premise == TAUT

    def test_explicit_taut_premise(self):
        r = parse_rule("[0.25] * => A", SCHEMA)
        assert r.is_fact

    def test_ground_mode(self):
        r = parse_rule("ground [1.0] A => B", SCHEMA)
        assert r.mode is Mode.GROUND

    def test_integer_annotation(self):
        assert parse_rule("[1] A => B", SCHEMA).target == 1.0
        assert parse_rule("[0] A => B", SCHEMA).target == 0.0

    def test_six_decimals_allowed(self):
        assert parse_rule("[0.123456] A", SCHEMA).target == 0.123456

    def test_seven_decimals_rejected(self):
        with pytest.raises(ParseError):
            parse_rule("[0.1234567] A", SCHEMA)

    def test_scientific_notation_rejected(self):
        with pytest.raises(ParseError):
            parse_rule("[1e-1] A", SCHEMA)

    def test_out_of_range_annotation(self):
        with pytest.raises(OutOfRangeError):
            parse_rule("[1.5] A", SCHEMA)

    def test_missing_annotation(self):
        with pytest.raises(ParseError):
            parse_rule("A => B", SCHEMA)

    def test_taut_conclusion_rejected(self):
        with pytest.raises(KbError):
            parse_rule("[0.5] A => *", SCHEMA)


class TestKbFiles:
    def test_full_kb(self):
        src = parse_kb(
            "# weather model\n"
            "option tolerance = 1e-9\n"
            "option max_sweeps = 50\n"
            "option heuristic = max_cardinality\n"
            "var Rain : boolean\n"
            "var Sky : {clear, cloudy, dark}\n"
            "var Wind : ordinal {calm < breezy < strong}\n"
            "\n"
            "rule [0.2] Rain\n"
            "rule [0.8] Sky = dark => Rain\n"
            "rule ground [0.5] Wind > calm => Sky <> clear\n"
        )
        assert [v.name for v in src.variables] == ["Rain", "Sky", "Wind"]
        assert src.options == SolverOptions(1e-9, 50, "max_cardinality")
        assert [r.id for r in src.rules] == ["R1", "R2", "R3"]
        assert src.rules[2].mode is Mode.GROUND

    def test_comments_and_blank_lines_ignored(self):
        src = parse_kb("# top\n\nvar A : boolean\n  # indented comment\nrule [0.5] A\n")
        assert len(src.variables) == 1
        assert len(src.rules) == 1

    def test_duplicate_variable(self):
        with pytest.raises(ParseError):
            parse_kb("var A : boolean\nvar A : boolean\n")

    def test_var_after_rule_rejected(self):
        with pytest.raises(ParseError):
            parse_kb("var A : boolean\nrule [0.5] A\nvar B : boolean\n")

    def test_undeclared_variable_in_rule(self):
        with pytest.raises(ResolutionError):
            parse_kb("var A : boolean\nrule [0.5] B\n")

    def test_reserved_word_as_variable(self):
        with pytest.raises(ParseError):
            parse_kb("var rule : boolean\n")

    def test_unknown_option(self):
        with pytest.raises(ParseError):
            parse_kb("option speed = 9\n")

    def test_bad_heuristic(self):
        with pytest.raises(ParseError):
            parse_kb("option heuristic = quickest\n")

    def test_fractional_max_sweeps_rejected(self):
        with pytest.raises(ParseError):
            parse_kb("option max_sweeps = 2.5\n")

    def test_error_line_numbers(self):
        with pytest.raises(KbError) as exc:
            parse_kb("var A : boolean\nvar B : boolean\nrule [0.5] A && B\n")
        assert exc.value.line == 3

    def test_empty_kb(self):
        src = parse_kb("")
        assert src.variables == ()
        assert src.rules == ()
        assert src.options == SolverOptions()


class TestCanonicalFormat:
    def test_format_sentence_minimal_parens(self):
        assert format_sentence(fact("A | B & !Color = red")) == "A | B & !Color = red"
        assert format_sentence(fact("(A | B) & Color = red")) == "(A | B) & Color = red"

    def test_right_nested_same_op_parenthesized(self):
        a = Atom(A, Comparator.EQ, "t")
        b = Atom(B, Comparator.EQ, "t")
        red = Atom(COLOR, Comparator.EQ, "red")
        right_nested = And(a, And(b, red))
        text = format_sentence(right_nested)
        assert text == "A & (B & Color = red)"
        assert fact(text) == right_nested

    def test_format_rule(self):
        r = parse_rule("[0.9] A => B", SCHEMA)
        assert format_rule(r) == "rule [0.900000] A => B"
        g = parse_rule("ground [1] A", SCHEMA)
        assert format_rule(g) == "rule ground [1.000000] A"

    def test_format_kb_reparses_identically(self):
        text = (
            "var A : boolean\nvar B : boolean\n"
            "var Color : {red, green, blue}\n"
            "var Size : ordinal {small < medium < large}\n"
            "rule [0.9] A & Size > small => B | Color in {red, blue}\n"
            "rule ground [0.125] !(A | B)\n"
        )
        src = parse_kb(text)
        canon = format_kb(src)
        assert parse_kb(canon) == src
        # canonical form is a fixed point
        assert format_kb(parse_kb(canon)) == canon

    def test_sentence_roundtrip_random(self):
        rng = random.Random(99)
        from .conftest import random_sentence

        for _ in range(400):
            s = random_sentence(rng, SCHEMA, 4)
            assert fact(format_sentence(s)) == s

    @given(st.integers(min_value=0, max_value=100_000))
    @settings(max_examples=80, deadline=None)
    def test_property_kb_roundtrip(self, seed):
        variables, rules = random_rule_set(seed, max_vars=6, max_rules=5)
        rules = tuple(
            dataclasses.replace(r, target=round(r.target, 6)) for r in rules
        )
        src = KnowledgeBaseSource(variables, rules)
        assert parse_kb(format_kb(src)) == src


class TestFuzz:
    """Arbitrary text never escapes the KbError hierarchy."""

    @given(st.text(max_size=120))
    @settings(max_examples=300, deadline=None)
    def test_parse_kb_total(self, text):
        try:
            parse_kb(text)
        except KbError:
            pass

    @given(st.text(alphabet="AB()!&|=<>{},*trufs 0123456789.", max_size=60))
    @settings(max_examples=300, deadline=None)
    def test_parse_fact_total(self, text):
        try:
            parse_fact(text, SCHEMA)
        except KbError:
            pass
