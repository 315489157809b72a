"""Concrete syntax for facts, rules, and knowledge-base files.

The file format is line-oriented UTF-8 text:

    # comment (also allowed after any line content)
    option tolerance = 1e-8
    option max_sweeps = 1000
    option heuristic = min_fill          # or max_cardinality
    var Rain : boolean
    var Color : { red, green, blue }
    var Level : ordinal { low < med < high }
    rule [0.8] Rain => Level > low
    rule ground [0.5] Color in {red, green}
    rule [0.25] *  => Rain               # '*' is the tautology

Variable declarations must precede the rules. A rule without ``=>`` is a
fact: its premise is the tautology. Fact syntax inside a rule:

    fact  := or ;  or := and ('|' and)* ;  and := unary ('&' unary)*
    unary := '!' unary | '(' fact ')' | '*' | atom
    atom  := Name | Name = v | Name <> v | Name < v | Name > v
           | Name in {v, ...} | Name notin {v, ...}

``!`` binds tighter than ``&``, which binds tighter than ``|``. A bare
variable name stands for ``Name = t`` and is only legal on booleans.
``<`` and ``>`` compare positions in an ordinal domain.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import KindError, OutOfRangeError, ParseError, ResolutionError, SchemaError
from .model import (
    TAUT,
    And,
    Atom,
    Comparator,
    Kind,
    Mode,
    Not,
    Or,
    Rule,
    Sentence,
    Taut,
    Variable,
    boolean,
    nominal,
    ordinal,
    variables_of,
)

RESERVED = {
    "var", "rule", "option", "ground", "in", "notin",
    "boolean", "ordinal", "assume", "eval",
}

HEURISTICS = ("min_fill", "max_cardinality")

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_SWEEPS = 1000


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = DEFAULT_TOLERANCE
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    heuristic: str = "min_fill"

    def __post_init__(self):
        if self.heuristic not in HEURISTICS:
            raise SchemaError(f"unknown heuristic {self.heuristic!r}, expected one of {HEURISTICS}")
        if self.tolerance <= 0:
            raise SchemaError("tolerance must be positive")
        if self.max_sweeps < 1:
            raise SchemaError("max_sweeps must be at least 1")


@dataclass(frozen=True)
class KnowledgeBaseSource:
    """A parsed knowledge base: schema, rules, and solver settings."""

    variables: tuple[Variable, ...]
    rules: tuple[Rule, ...]
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate variable names in knowledge base")
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate rule ids in knowledge base")
        declared = set(self.variables)
        for rule in self.rules:
            for var in variables_of(rule.premise) | variables_of(rule.conclusion):
                if var not in declared:
                    raise SchemaError(
                        f"rule {rule.id!r} references undeclared variable {var.name!r}"
                    )

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise SchemaError(f"unknown variable {name!r}")


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#.*)
  | (?P<arrow>=>)
  | (?P<neq><>)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(){}\[\],=<>!&|*:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'arrow' | 'neq' | 'number' | 'name' | punct text | 'end'
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos + 1)
        pos = m.end()
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        tok_text = m.group()
        if kind == "punct":
            kind = tok_text
        tokens.append(Token(kind, tok_text, line, m.start() + 1))
    tokens.append(Token("end", "", line, len(text) + 1))
    return tokens


class _TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "end":
            self.pos += 1
        return tok

    def accept(self, kind: str) -> Token | None:
        if self.peek().kind == kind:
            return self.next()
        return None

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {what}, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return self.next()

    def expect_end(self):
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)


# ---------------------------------------------------------------------------
# Fact grammar


def _parse_fact_expr(ts: _TokenStream, schema: dict[str, Variable]) -> Sentence:
    left = _parse_and(ts, schema)
    while ts.accept("|"):
        right = _parse_and(ts, schema)
        left = Or(left, right)
    return left


def _parse_and(ts: _TokenStream, schema: dict[str, Variable]) -> Sentence:
    left = _parse_unary(ts, schema)
    while ts.accept("&"):
        right = _parse_unary(ts, schema)
        left = And(left, right)
    return left


def _parse_unary(ts: _TokenStream, schema: dict[str, Variable]) -> Sentence:
    if ts.accept("!"):
        return Not(_parse_unary(ts, schema))
    if ts.accept("("):
        inner = _parse_fact_expr(ts, schema)
        ts.expect(")", "')'")
        return inner
    if ts.accept("*"):
        return TAUT
    return _parse_atom(ts, schema)


def _parse_atom(ts: _TokenStream, schema: dict[str, Variable]) -> Sentence:
    tok = ts.peek()
    if tok.kind != "name":
        raise ParseError(f"expected a variable name, found {tok.text or 'end of input'!r}", tok.line, tok.col)
    ts.next()
    if tok.text not in schema:
        raise ResolutionError(f"unknown variable {tok.text!r}", tok.line, tok.col)
    var = schema[tok.text]

    nxt = ts.peek()
    if nxt.kind == "=":
        ts.next()
        return _make_atom(var, Comparator.EQ, _parse_value(ts, var), tok)
    if nxt.kind == "neq":
        ts.next()
        return _make_atom(var, Comparator.NEQ, _parse_value(ts, var), tok)
    if nxt.kind == "<":
        ts.next()
        return _make_atom(var, Comparator.LT, _parse_value(ts, var), tok)
    if nxt.kind == ">":
        ts.next()
        return _make_atom(var, Comparator.GT, _parse_value(ts, var), tok)
    if nxt.kind == "name" and nxt.text in ("in", "notin"):
        ts.next()
        cmp = Comparator.IN if nxt.text == "in" else Comparator.NOTIN
        return _make_atom(var, cmp, _parse_value_list(ts, var), tok)

    # bare name: boolean shorthand for `Name = t`
    if var.kind is not Kind.BOOLEAN:
        raise KindError(
            f"bare name {var.name!r} needs a comparator; shorthand is only for booleans",
            tok.line, tok.col,
        )
    return Atom(var, Comparator.EQ, "t")


def _make_atom(var: Variable, cmp: Comparator, operand, tok: Token) -> Atom:
    try:
        return Atom(var, cmp, operand)
    except (KindError, SchemaError) as exc:
        raise type(exc)(exc.message, tok.line, tok.col) from None


def _parse_value(ts: _TokenStream, var: Variable) -> str:
    tok = ts.peek()
    if tok.kind != "name":
        raise ParseError(f"expected a value, found {tok.text or 'end of input'!r}", tok.line, tok.col)
    ts.next()
    if tok.text not in var.values:
        raise ResolutionError(
            f"{tok.text!r} is not a value of variable {var.name!r}", tok.line, tok.col
        )
    return tok.text


def _parse_value_list(ts: _TokenStream, var: Variable) -> tuple[str, ...]:
    ts.expect("{", "'{'")
    values = [_parse_value(ts, var)]
    while ts.accept(","):
        values.append(_parse_value(ts, var))
    ts.expect("}", "'}'")
    return tuple(values)


def parse_fact(text: str, schema: dict[str, Variable] | list[Variable], line: int = 1) -> Sentence:
    """Parse one fact expression against a declared schema."""
    schema = _as_schema(schema)
    ts = _TokenStream(tokenize(text, line))
    fact = _parse_fact_expr(ts, schema)
    ts.expect_end()
    return fact


def _as_schema(schema) -> dict[str, Variable]:
    if isinstance(schema, dict):
        return schema
    return {v.name: v for v in schema}


# ---------------------------------------------------------------------------
# Rules


def _parse_target(ts: _TokenStream) -> float:
    ts.expect("[", "a probability annotation '[x]'")
    tok = ts.expect("number", "a probability")
    if not re.fullmatch(r"\d+(\.\d{1,6})?", tok.text):
        raise ParseError(
            f"probability {tok.text!r} must be a plain decimal with at most 6 decimals",
            tok.line, tok.col,
        )
    value = float(tok.text)
    if not 0.0 <= value <= 1.0:
        raise OutOfRangeError(f"probability {tok.text} outside [0, 1]", tok.line, tok.col)
    ts.expect("]", "']'")
    return value


def _parse_rule_body(ts: _TokenStream, schema: dict[str, Variable], rule_id: str) -> Rule:
    mode = Mode.FLOAT
    tok = ts.peek()
    if tok.kind == "name" and tok.text == "ground":
        ts.next()
        mode = Mode.GROUND
    start = ts.peek()
    target = _parse_target(ts)
    first = _parse_fact_expr(ts, schema)
    if ts.accept("arrow"):
        premise, conclusion = first, _parse_fact_expr(ts, schema)
    else:
        premise, conclusion = TAUT, first
    ts.expect_end()
    try:
        return Rule(rule_id, premise, conclusion, target, mode)
    except (SchemaError, OutOfRangeError) as exc:
        raise type(exc)(exc.message, start.line, start.col) from None


def parse_rule(
    text: str,
    schema: dict[str, Variable] | list[Variable],
    rule_id: str = "R1",
    line: int = 1,
) -> Rule:
    """Parse ``[x] premise => conclusion`` (or a bare annotated fact)."""
    ts = _TokenStream(tokenize(text, line))
    return _parse_rule_body(ts, _as_schema(schema), rule_id)


# ---------------------------------------------------------------------------
# Knowledge-base files


def parse_kb(text: str) -> KnowledgeBaseSource:
    """Parse a whole knowledge-base file."""
    variables: list[Variable] = []
    schema: dict[str, Variable] = {}
    rules: list[Rule] = []
    options: dict[str, object] = {}
    seen_rule = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = tokenize(raw, lineno)
        ts = _TokenStream(tokens)
        head = ts.peek()
        if head.kind == "end":
            continue
        if head.kind == "name" and head.text == "option":
            ts.next()
            _parse_option_line(ts, options)
        elif head.kind == "name" and head.text == "var":
            ts.next()
            if seen_rule:
                raise ParseError("variable declarations must precede rules", head.line, head.col)
            var = _parse_var_line(ts)
            if var.name in schema:
                raise ParseError(f"duplicate variable {var.name!r}", head.line, head.col)
            variables.append(var)
            schema[var.name] = var
        elif head.kind == "name" and head.text == "rule":
            ts.next()
            seen_rule = True
            rules.append(_parse_rule_body(ts, schema, f"R{len(rules) + 1}"))
        else:
            raise ParseError(
                f"expected 'var', 'rule', or 'option', found {head.text!r}", head.line, head.col
            )

    try:
        opts = SolverOptions(**options)  # type: ignore[arg-type]
    except SchemaError as exc:
        raise ParseError(exc.message) from None
    return KnowledgeBaseSource(tuple(variables), tuple(rules), opts)


def _parse_var_line(ts: _TokenStream) -> Variable:
    name_tok = ts.expect("name", "a variable name")
    if name_tok.text in RESERVED:
        raise ParseError(f"{name_tok.text!r} is a reserved word", name_tok.line, name_tok.col)
    ts.expect(":", "':'")
    tok = ts.peek()
    if tok.kind == "name" and tok.text == "boolean":
        ts.next()
        ts.expect_end()
        return boolean(name_tok.text)
    if tok.kind == "name" and tok.text == "ordinal":
        ts.next()
        values = _parse_decl_values(ts, separator="<")
        ts.expect_end()
        return _build_var(ordinal, name_tok, values)
    if tok.kind == "{":
        values = _parse_decl_values(ts, separator=",")
        ts.expect_end()
        return _build_var(nominal, name_tok, values)
    raise ParseError(
        f"expected 'boolean', 'ordinal {{...}}', or '{{...}}', found {tok.text!r}",
        tok.line, tok.col,
    )


def _build_var(factory, name_tok: Token, values: list[str]) -> Variable:
    try:
        return factory(name_tok.text, values)
    except SchemaError as exc:
        raise ParseError(exc.message, name_tok.line, name_tok.col) from None


def _parse_decl_values(ts: _TokenStream, separator: str) -> list[str]:
    ts.expect("{", "'{'")
    values = []
    while True:
        tok = ts.expect("name", "a value identifier")
        if tok.text in RESERVED:
            raise ParseError(f"{tok.text!r} is a reserved word", tok.line, tok.col)
        values.append(tok.text)
        if ts.accept(separator):
            continue
        ts.expect("}", f"'{separator}' or '}}'")
        return values


def _parse_option_line(ts: _TokenStream, options: dict[str, object]) -> None:
    key_tok = ts.expect("name", "an option key")
    ts.expect("=", "'='")
    if key_tok.text == "tolerance":
        tok = ts.expect("number", "a number")
        options["tolerance"] = float(tok.text)
    elif key_tok.text == "max_sweeps":
        tok = ts.expect("number", "an integer")
        if not tok.text.isdigit():
            raise ParseError(f"max_sweeps must be an integer, found {tok.text!r}", tok.line, tok.col)
        options["max_sweeps"] = int(tok.text)
    elif key_tok.text == "heuristic":
        tok = ts.expect("name", "a heuristic name")
        if tok.text not in HEURISTICS:
            raise ParseError(
                f"unknown heuristic {tok.text!r}, expected one of {HEURISTICS}", tok.line, tok.col
            )
        options["heuristic"] = tok.text
    else:
        raise ParseError(f"unknown option key {key_tok.text!r}", key_tok.line, key_tok.col)
    ts.expect_end()


# ---------------------------------------------------------------------------
# Canonical formatting

_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_ATOM = 1, 2, 3, 4


def format_sentence(sentence: Sentence) -> str:
    return _fmt(sentence, 0)


def _fmt(s: Sentence, parent_prec: int) -> str:
    if isinstance(s, Taut):
        return "*"
    if isinstance(s, Atom):
        return _fmt_atom(s)
    if isinstance(s, Not):
        text = "!" + _fmt(s.operand, _PREC_NOT)
        prec = _PREC_NOT
    elif isinstance(s, And):
        # right operand one level up so left-associative reparse is structural
        text = _fmt(s.left, _PREC_AND) + " & " + _fmt(s.right, _PREC_AND + 1)
        prec = _PREC_AND
    elif isinstance(s, Or):
        text = _fmt(s.left, _PREC_OR) + " | " + _fmt(s.right, _PREC_OR + 1)
        prec = _PREC_OR
    else:
        raise SchemaError(f"unknown sentence node {s!r}")
    return f"({text})" if prec < parent_prec else text


def _fmt_atom(atom: Atom) -> str:
    var, cmp = atom.variable, atom.comparator
    if cmp is Comparator.EQ and var.kind is Kind.BOOLEAN and atom.operand == "t":
        return var.name
    if cmp in (Comparator.IN, Comparator.NOTIN):
        return f"{var.name} {cmp.value} {{{', '.join(atom.operand)}}}"
    return f"{var.name} {cmp.value} {atom.operand}"


def format_rule(rule: Rule) -> str:
    mode = "ground " if rule.mode is Mode.GROUND else ""
    body = f"[{rule.target:.6f}] "
    if rule.is_fact:
        body += format_sentence(rule.conclusion)
    else:
        body += f"{format_sentence(rule.premise)} => {format_sentence(rule.conclusion)}"
    return f"rule {mode}{body}"


def format_variable(var: Variable) -> str:
    if var.kind is Kind.BOOLEAN:
        return f"var {var.name} : boolean"
    if var.kind is Kind.ORDINAL:
        return f"var {var.name} : ordinal {{{' < '.join(var.values)}}}"
    return f"var {var.name} : {{{', '.join(var.values)}}}"


def format_kb(source: KnowledgeBaseSource) -> str:
    """Canonical text for a knowledge base; reparsing is structurally exact."""
    lines = [
        f"option tolerance = {source.options.tolerance!r}",
        f"option max_sweeps = {source.options.max_sweeps}",
        f"option heuristic = {source.options.heuristic}",
        "",
    ]
    lines.extend(format_variable(v) for v in source.variables)
    if source.rules:
        lines.append("")
        lines.extend(format_rule(r) for r in source.rules)
    return "\n".join(lines) + "\n"
