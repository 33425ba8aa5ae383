"""Recursive-descent parser for the optimization DSL.

Grammar:

    problem   := decl* objective constraint*
    decl      := "vars" ident+ ";"
    objective := ("minimize"|"maximize") expr ";"
    constraint:= expr (">="|"=="|"<=") expr ";"
               | "box" ident "in" "[" num "," num "]" ";"
    expr      := term (("+"|"-") term)*
    term      := factor (("*"|"/") factor)*
    factor    := num | ident | "(" expr ")" | factor "^" posint
               | "abs(" expr ")" | "min(" expr "," expr ")"
               | "max(" expr "," expr ")" | "root(" expr "," posint ")"
               | "sqrt(" expr ")" | "-" factor

    "#" starts a comment running to end of line; whitespace is free-form.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from . import expr as E
from .errors import ParseError, UnknownIdentifier
from .expr import Box, Expr

_TOKEN_RE = re.compile(
    r"""
    (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>>=|==|<=|[-+*/^()\[\],;])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"vars", "minimize", "maximize", "box", "in", "abs", "min", "max", "root", "sqrt"}


@dataclass
class Token:
    kind: str  # num | ident | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        pos = 0
        while pos < len(body):
            if body[pos].isspace():
                pos += 1
                continue
            m = _TOKEN_RE.match(body, pos)
            if not m:
                raise ParseError(f"unexpected character {body[pos]!r}", lineno, pos + 1)
            kind = m.lastgroup
            tokens.append(Token(kind, m.group(), lineno, pos + 1))
            pos = m.end()
    tokens.append(Token("eof", "", len(text.splitlines()) + 1, 1))
    return tokens


@dataclass
class ProblemSpec:
    """Parsed problem file: declarations, objective, constraints, box."""

    variables: list[str]
    sense: str  # "min" | "max"
    objective: Expr
    constraints: list[tuple[Expr, str]] = field(default_factory=list)
    box: Box | None = None


class _Parser:
    def __init__(self, tokens: list[Token], variables: dict[str, int] | None):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables  # name -> index; None means infer
        self.inferred: list[str] = []

    # token helpers -------------------------------------------------------
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return self.advance()

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def fail(self, message: str):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col)

    # name resolution -----------------------------------------------------
    def n_vars(self) -> int:
        return len(self.variables) if self.variables is not None else max(len(self.inferred), 1)

    def var_index(self, tok: Token) -> int:
        if self.variables is not None:
            idx = self.variables.get(tok.text)
            if idx is None:
                raise UnknownIdentifier(f"unknown identifier {tok.text!r}", tok.line, tok.col)
            return idx
        if tok.text not in self.inferred:
            self.inferred.append(tok.text)
        return self.inferred.index(tok.text)

    # grammar -------------------------------------------------------------
    def number(self) -> float:
        sign = 1.0
        if self.at("-"):
            self.advance()
            sign = -1.0
        tok = self.peek()
        if tok.kind != "num":
            self.fail(f"expected a number, found {tok.text!r}")
        self.advance()
        return sign * float(tok.text)

    def posint(self) -> int:
        tok = self.peek()
        if tok.kind != "num" or not tok.text.isdigit() or int(tok.text) < 1:
            self.fail(f"expected a positive integer, found {tok.text!r}")
        self.advance()
        return int(tok.text)

    def expr(self) -> "_Deferred":
        acc = self.term()
        while self.peek().text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            acc = _Deferred(op, (acc, rhs))
        return acc

    def term(self) -> "_Deferred":
        acc = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.advance().text
            rhs = self.factor()
            acc = _Deferred(op, (acc, rhs))
        return acc

    def factor(self) -> "_Deferred":
        tok = self.peek()
        if tok.text == "-":
            self.advance()
            node = _Deferred("neg", (self.factor(),))
            return node
        if tok.kind == "num":
            self.advance()
            node = _Deferred("num", float(tok.text))
        elif tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
        elif tok.text in ("abs", "sqrt"):
            self.advance()
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            node = _Deferred(tok.text, (inner,))
        elif tok.text in ("min", "max"):
            self.advance()
            self.expect("(")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            node = _Deferred(tok.text, (a, b))
        elif tok.text == "root":
            self.advance()
            self.expect("(")
            inner = self.expr()
            self.expect(",")
            qtok = self.peek()
            q = self.posint()
            self.expect(")")
            node = _Deferred("root", (inner, q, qtok))
        elif tok.kind == "ident":
            if tok.text in _KEYWORDS:
                self.fail(f"keyword {tok.text!r} cannot be used as a variable")
            self.advance()
            self.var_index(tok)
            node = _Deferred("var", tok)
        else:
            self.fail(f"expected a factor, found {tok.text or 'end of input'!r}")
        while self.at("^"):
            self.advance()
            k = self.posint()
            node = _Deferred("pow", (node, k))
        return node


@dataclass
class _Deferred:
    """Syntax tree built before the variable count is known."""

    op: str
    payload: object

    def build(self, n: int, resolve) -> Expr:
        op, payload = self.op, self.payload
        if op == "num":
            return E.constant(n, payload)
        if op == "var":
            return E.variable(n, resolve(payload))
        if op == "neg":
            return E.neg(payload[0].build(n, resolve))
        if op == "pow":
            return E.power(payload[0].build(n, resolve), payload[1])
        if op == "root":
            inner, q, qtok = payload
            if q < 1:
                raise ParseError(f"root index must be >= 1, got {q}", qtok.line, qtok.col)
            return E.root_of(inner.build(n, resolve), q)
        if op == "sqrt":
            return E.root_of(payload[0].build(n, resolve), 2)
        if op == "abs":
            return E.abs_of(payload[0].build(n, resolve))
        kids = [c.build(n, resolve) for c in payload]
        if op == "+":
            return E.add(*kids)
        if op == "-":
            return E.sub(*kids)
        if op == "*":
            return E.mul(*kids)
        if op == "/":
            return E.div(*kids)
        if op == "min":
            return E.min_of(*kids)
        return E.max_of(*kids)


def parse_expr(text: str, variables: list[str] | None = None) -> Expr:
    """Parse a single expression.

    With ``variables=None`` the ambient variables are inferred in order of
    first appearance.
    """
    tokens = tokenize(text)
    varmap = {name: i for i, name in enumerate(variables)} if variables is not None else None
    parser = _Parser(tokens, varmap)
    tree = parser.expr()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)
    if varmap is not None:
        n = len(variables)
        index = dict(varmap)
    else:
        n = max(len(parser.inferred), 1)
        index = {name: i for i, name in enumerate(parser.inferred)}
    return tree.build(n, lambda t: index[t.text])


def parse_problem(text: str) -> ProblemSpec:
    """Parse a full problem file (declarations, objective, constraints)."""
    tokens = tokenize(text)
    # first pass: collect declarations so expressions know the variables
    names: list[str] = []
    scan = _Parser(tokens, None)
    while scan.at("vars"):
        scan.advance()
        saw = False
        while scan.peek().kind == "ident" and scan.peek().text not in _KEYWORDS:
            tok = scan.advance()
            if tok.text in names:
                raise ParseError(f"variable {tok.text!r} declared twice", tok.line, tok.col)
            names.append(tok.text)
            saw = True
        if not saw:
            scan.fail("expected at least one variable name after 'vars'")
        scan.expect(";")
    if not names:
        scan.fail("expected a 'vars' declaration")

    n = len(names)
    varmap = {name: i for i, name in enumerate(names)}
    parser = _Parser(tokens, varmap)
    parser.pos = scan.pos

    def build(tree: _Deferred) -> Expr:
        return tree.build(n, lambda t: varmap[t.text])

    tok = parser.peek()
    if tok.text not in ("minimize", "maximize"):
        parser.fail("expected 'minimize' or 'maximize'")
    sense = "min" if parser.advance().text == "minimize" else "max"
    objective = build(parser.expr())
    parser.expect(";")

    constraints: list[tuple[Expr, str]] = []
    lo = [-math.inf] * n
    hi = [math.inf] * n
    boxed = set()
    while parser.peek().kind != "eof":
        if parser.at("box"):
            parser.advance()
            tok = parser.peek()
            if tok.kind != "ident" or tok.text not in varmap:
                raise UnknownIdentifier(f"unknown identifier {tok.text!r}", tok.line, tok.col)
            parser.advance()
            idx = varmap[tok.text]
            if idx in boxed:
                raise ParseError(f"duplicate box for {tok.text!r}", tok.line, tok.col)
            boxed.add(idx)
            parser.expect("in")
            parser.expect("[")
            lo[idx] = parser.number()
            parser.expect(",")
            hi[idx] = parser.number()
            parser.expect("]")
            parser.expect(";")
            if lo[idx] > hi[idx]:
                raise ParseError(f"empty box for {tok.text!r}", tok.line, tok.col)
            continue
        lhs = build(parser.expr())
        tok = parser.peek()
        if tok.text not in (">=", "==", "<="):
            parser.fail("expected '>=', '==' or '<=' in constraint")
        rel = parser.advance().text
        rhs = build(parser.expr())
        parser.expect(";")
        constraints.append((E.sub(lhs, rhs), rel))

    return ProblemSpec(
        variables=names,
        sense=sense,
        objective=objective,
        constraints=constraints,
        box=Box(tuple(lo), tuple(hi)),
    )
