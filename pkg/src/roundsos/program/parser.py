"""Parser for the ``let box_/obj_/cstr_/uncert_`` program language."""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Callable, Optional

import structlog

from roundsos.config.constants import TRANSC_ALIASES
from roundsos.core.exceptions import ArityMismatch, NotPolynomial, ParseError, UnknownVariable
from roundsos.interval import Interval
from roundsos.polynomial import Poly
from roundsos.program.ast import (
    ONE_EXPR,
    Add,
    Const,
    Div,
    Expr,
    IfThenElse,
    Let,
    Mul,
    Neg,
    Sqrt,
    Sub,
    Transc,
    Var,
    free_variables,
)
from roundsos.program.spec import ProgramSpec
from roundsos.program.symbolic import expr_to_poly, substitute

logger = structlog.get_logger()

KEYWORDS = frozenset({"let", "in", "if", "then", "else"})
SECTIONS = ("box", "obj", "cstr", "uncert")
RELOPS = {">=": ">=", ">": ">=", "≥": ">=", "<=": "<=", "<": "<=", "≤": "<="}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>;;|\*\*|>=|<=|[-+*/(),;\[\]=<>≤≥])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    """Split source into tokens, dropping whitespace and ``(* ... *)`` comments."""
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        if text.startswith("(*", pos):
            depth, start = 0, pos
            while pos < len(text):
                if text.startswith("(*", pos):
                    depth += 1
                    pos += 2
                elif text.startswith("*)", pos):
                    depth -= 1
                    pos += 2
                    if depth == 0:
                        break
                else:
                    if text[pos] == "\n":
                        line, line_start = line + 1, pos + 1
                    pos += 1
            if depth:
                raise ParseError("unterminated comment", line, start - line_start + 1)
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup or ""
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def parse_number(text: str) -> Fraction:
    """Exact value of a decimal or scientific literal."""
    try:
        return Fraction(Decimal(text))
    except InvalidOperation as e:
        raise ParseError(f"bad number {text!r}") from e


def power_chain(base: Expr, k: int) -> Expr:
    """``base ** k`` as a left-associated product."""
    if k == 0:
        return ONE_EXPR
    acc = base
    for _ in range(k - 1):
        acc = Mul(acc, base)
    return acc


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0
        self.scope: dict[str, int] = {}
        self.next_index = 0
        self.bindings: dict[int, Expr] = {}
        self.let_names: dict[int, str] = {}

    # Token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "ident")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        t = tok or self.tok
        return ParseError(message, t.line, t.col)

    # Literals

    def signed_number(self) -> Fraction:
        sign = 1
        while self.at("-") or self.at("+"):
            if self.advance().text == "-":
                sign = -sign
        tok = self.tok
        if tok.kind != "number":
            raise self.error(f"expected a number, found {tok.text or 'end of input'!r}")
        self.advance()
        return sign * parse_number(tok.text)

    def separated(self, item: Callable[[], object], sep: str = ";") -> list:
        """Bracketed list ``[a; b; ...]``, possibly empty."""
        self.expect("[")
        items = []
        if not self.at("]"):
            items.append(item())
            while self.at(sep):
                self.advance()
                if self.at("]"):
                    break
                items.append(item())
        self.expect("]")
        return items

    # Expressions

    def expression(self) -> Expr:
        if self.at("let"):
            return self.let_expression()
        if self.at("if"):
            return self.if_expression()
        return self.additive()

    def let_expression(self) -> Expr:
        self.expect("let")
        name_tok = self.advance()
        if name_tok.kind != "ident" or name_tok.text in KEYWORDS:
            raise self.error("expected a name after 'let'", name_tok)
        self.expect("=")
        binding = self.expression()
        self.expect("in")
        index = self.next_index
        self.next_index += 1
        outer = self.scope.get(name_tok.text)
        self.scope[name_tok.text] = index
        self.bindings[index] = binding
        self.let_names[index] = name_tok.text
        body = self.expression()
        if outer is None:
            del self.scope[name_tok.text]
        else:
            self.scope[name_tok.text] = outer
        return Let(index, binding, body)

    def if_expression(self) -> Expr:
        if_tok = self.expect("if")
        cond_expr = self.condition()
        self.expect("then")
        then = self.expression()
        self.expect("else")
        orelse = self.expression()
        return IfThenElse(self.condition_poly(cond_expr, if_tok), then, orelse, cond_expr)

    def condition(self) -> Expr:
        if self.at("("):
            saved = self.pos
            self.advance()
            lhs = self.additive()
            if self.tok.text in RELOPS:
                cond = self.comparison(lhs)
                self.expect(")")
                return cond
            self.pos = saved
        lhs = self.additive()
        if self.tok.text not in RELOPS:
            raise self.error("expected a comparison in condition")
        return self.comparison(lhs)

    def comparison(self, lhs: Expr) -> Expr:
        op = RELOPS[self.advance().text]
        rhs = self.additive()
        if op == ">=":
            return lhs if rhs == Const(0) else Sub(lhs, rhs)
        return rhs if lhs == Const(0) else Sub(rhs, lhs)

    def condition_poly(self, cond_expr: Expr, tok: Token) -> Poly:
        expanded = cond_expr
        while free_variables(expanded) & self.bindings.keys():
            expanded = substitute(expanded, self.bindings)
        try:
            return expr_to_poly(expanded)
        except NotPolynomial as e:
            raise self.error("condition must be polynomial", tok) from e

    def additive(self) -> Expr:
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            inner = self.unary()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Neg(inner)
        if self.at("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.at("**"):
            self.advance()
            tok = self.tok
            if tok.kind != "number" or not tok.text.isdigit():
                raise self.error("exponent must be a nonnegative integer literal")
            self.advance()
            return power_chain(base, int(tok.text))
        return base

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Const(parse_number(tok.text))
        if self.at("("):
            self.advance()
            node = self.expression()
            self.expect(")")
            return node
        if self.at("let") or self.at("if"):
            return self.expression()
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if name in self.scope:
                return Var(self.scope[name])
            if name == "sqrt" or name in TRANSC_ALIASES:
                self.expect("(")
                arg = self.expression()
                self.expect(")")
                return Sqrt(arg) if name == "sqrt" else Transc(TRANSC_ALIASES[name], arg)
            raise UnknownVariable(f"unknown variable {name!r}", tok.line, tok.col)
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")

    def polynomial(self) -> Poly:
        tok = self.tok
        expr = self.expression()
        try:
            return expr_to_poly(expr, len(self.params))
        except NotPolynomial as e:
            raise self.error("constraint must be polynomial", tok) from e

    # Top level

    params: list[str]

    def program(self) -> ProgramSpec:
        sections: dict[str, tuple[Token, list[str], int]] = {}
        while self.tok.kind != "eof":
            self.expect("let")
            head = self.advance()
            kind, _, prog_name = head.text.partition("_")
            if head.kind != "ident" or kind not in SECTIONS or not prog_name:
                raise self.error(
                    "expected a binding named box_, obj_, cstr_ or uncert_", head
                )
            if kind in sections:
                raise self.error(f"duplicate {kind}_ binding", head)
            params: list[str] = []
            while self.tok.kind == "ident" and not self.at("="):
                params.append(self.advance().text)
            self.expect("=")
            start = self.pos
            depth = 0
            while not (self.at(";;") and depth == 0):
                if self.tok.kind == "eof":
                    raise self.error("missing ';;'")
                if self.at("[") or self.at("("):
                    depth += 1
                elif self.at("]") or self.at(")"):
                    depth -= 1
                self.advance()
            self.advance()
            sections[kind] = (head, params, start)
        if "box" not in sections or "obj" not in sections:
            raise self.error("program needs box_ and obj_ bindings")

        box_head, self.params, _ = sections["box"]
        name = box_head.text.partition("_")[2]
        for kind, (head, params, _) in sections.items():
            if params != self.params:
                raise ArityMismatch(
                    f"{kind}_ binding declares {params}, box_ declares {self.params}",
                    details={"line": head.line, "col": head.col},
                )
        n = len(self.params)
        if len(set(self.params)) != n:
            raise ArityMismatch("repeated variable name", details={"variables": self.params})
        self.scope = {v: i for i, v in enumerate(self.params)}
        self.next_index = n

        self.pos = sections["box"][2]
        pairs = self.separated(self.box_entry)
        if len(pairs) != n:
            raise ArityMismatch(
                f"box has {len(pairs)} intervals for {n} variables",
                details={"line": box_head.line, "col": box_head.col},
            )
        self.expect(";;")
        box = tuple(Interval(lo, hi) for lo, hi in pairs)

        self.pos = sections["obj"][2]
        self.expect("[")
        self.expect("(")
        objective = self.expression()
        self.expect(",")
        target = self.signed_number()
        self.expect(")")
        self.expect("]")
        self.expect(";;")

        constraints: list[Poly] = []
        if "cstr" in sections:
            self.pos = sections["cstr"][2]
            constraints = self.separated(self.polynomial)
            self.expect(";;")

        uncertainties: list[Fraction] = []
        if "uncert" in sections:
            self.pos = sections["uncert"][2]
            uncertainties = self.separated(self.signed_number)
            self.expect(";;")
            if len(uncertainties) != n:
                raise ArityMismatch(f"{len(uncertainties)} uncertainties for {n} variables")

        return ProgramSpec(
            name=name,
            names=tuple(self.params),
            box=box,
            objective=objective,
            target_bound=target,
            constraints=tuple(constraints),
            uncertainties=tuple(uncertainties),
            let_names=dict(self.let_names),
        )

    def box_entry(self) -> tuple[Fraction, Fraction]:
        self.expect("(")
        lo = self.signed_number()
        self.expect(",")
        hi = self.signed_number()
        self.expect(")")
        return lo, hi


def parse_program(text: str) -> ProgramSpec:
    """Parse program source into a :class:`ProgramSpec`.

    Raises:
        ParseError: on malformed source, with line and column.
        UnknownVariable: on an undeclared identifier.
        ArityMismatch: when bindings disagree on variables or the box length.
        EmptyBox: when an interval has its lower end above the upper end.
    """
    spec = _Parser(tokenize(text)).program()
    logger.debug(
        "Parsed program",
        name=spec.name,
        variables=spec.n,
        constraints=spec.k,
    )
    return spec
