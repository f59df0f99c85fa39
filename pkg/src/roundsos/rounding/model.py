"""Relative-error rounding model.

Each floating-point operation ``op`` is modelled as ``op(x, y) * (1 + e)`` with
``|e|`` bounded by the unit roundoff. Error variables live in the same index
space as inputs, after them: inputs are ``0..n-1`` and errors ``n..n+m-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Literal, Optional, Sequence

import structlog

from roundsos.interval import Interval
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
    rebuild,
    walk,
)
from roundsos.program.evaluate import condition_expr
from roundsos.program.symbolic import inline_lets, substitute
from roundsos.rounding.format import FpFormat

logger = structlog.get_logger()


class ErrorSource(str, Enum):
    """What introduced an error variable."""

    OPERATION = "operation"
    INPUT = "input"
    CONSTANT = "constant"
    SQRT = "sqrt"
    TRANSCENDENTAL = "transcendental"
    UNCERTAINTY = "uncertainty"
    MERGED = "merged"


@dataclass(frozen=True)
class ErrorVar:
    """Error variable ``e_id`` with ``|e_id| <= magnitude``."""

    id: int
    magnitude: Fraction
    source: ErrorSource
    provenance: str = ""

    def __post_init__(self) -> None:
        if self.magnitude <= 0:
            raise ValueError("error magnitude must be positive")


@dataclass(frozen=True)
class RoundingOptions:
    input_rounding: bool = True
    round_constants: bool = True
    neg_error: bool = False
    merge: bool = False
    merge_bound: Literal["linear", "gamma"] = "linear"


@dataclass(frozen=True)
class RoundedExpr:
    """Rounded body over inputs ``0..n-1`` and errors ``n..n+m-1``.

    ``exact`` is the real-valued program (lets inlined); substituting zero for
    every error variable in ``body`` gives back ``exact``.
    """

    body: Expr
    n: int
    errors: tuple[ErrorVar, ...]
    exact: Expr
    format: FpFormat = field(default_factory=lambda: FpFormat(53))

    @property
    def m(self) -> int:
        return len(self.errors)

    @property
    def error_indices(self) -> range:
        return range(self.n, self.n + self.m)

    @property
    def error_box(self) -> tuple[Interval, ...]:
        return tuple(Interval.symmetric(ev.magnitude) for ev in self.errors)

    def error(self, index: int) -> ErrorVar:
        return self.errors[index - self.n]

    def magnitude(self, index: int) -> Fraction:
        return self.errors[index - self.n].magnitude

    def full_box(self, box: Sequence[Interval]) -> list[Interval]:
        """Input box followed by the error box."""
        return list(box) + list(self.error_box)

    def at_zero_error(self) -> Expr:
        zero = Const(Fraction(0))
        return substitute(self.body, {i: zero for i in self.error_indices}, simplify_result=True)


def one_plus(index: int) -> Expr:
    return Add(ONE_EXPR, Var(index))


def is_error_factor(node: Expr, n: int) -> bool:
    """Whether ``node`` is ``1 + e`` for an error variable ``e``."""
    return (
        isinstance(node, Add)
        and node.left == ONE_EXPR
        and isinstance(node.right, Var)
        and node.right.index >= n
    )


def is_representable(value: Fraction, precision: int) -> bool:
    """Exactly representable with a ``precision``-bit significand (no exponent limits)."""
    if value == 0:
        return True
    den = value.denominator
    if den & (den - 1):
        return False
    num = abs(value.numerator)
    while num % 2 == 0:
        num //= 2
    return num.bit_length() <= precision


class _Rounder:
    def __init__(self, n: int, fmt: FpFormat, options: RoundingOptions) -> None:
        self.n = n
        self.fmt = fmt
        self.options = options
        self.errors: list[ErrorVar] = []
        self.memo: dict[Expr, Expr] = {}

    def fresh(self, magnitude: Fraction, source: ErrorSource, provenance: str) -> int:
        index = self.n + len(self.errors)
        self.errors.append(ErrorVar(index, magnitude, source, provenance))
        return index

    def rounded(self, inner: Expr, magnitude: Fraction, source: ErrorSource, what: str) -> Expr:
        return Mul(inner, one_plus(self.fresh(magnitude, source, what)))

    def __call__(self, root: Expr) -> Expr:
        for node in walk(root):
            if node not in self.memo:
                self.memo[node] = self.visit(node)
        return self.memo[root]

    def visit(self, node: Expr) -> Expr:
        eps = self.fmt.eps
        opts = self.options
        if isinstance(node, Const):
            if opts.round_constants and not is_representable(node.value, self.fmt.precision):
                return self.rounded(node, eps, ErrorSource.CONSTANT, f"constant {node.value}")
            return node
        if isinstance(node, Var):
            if opts.input_rounding:
                return self.rounded(node, eps, ErrorSource.INPUT, f"input x{node.index}")
            return node
        kids = tuple(self.memo[c] for c in node.children())
        if isinstance(node, Neg):
            inner = Neg(kids[0])
            if opts.neg_error:
                return self.rounded(inner, eps, ErrorSource.OPERATION, "neg")
            return inner
        if isinstance(node, (Add, Sub, Mul, Div)):
            name = type(node).__name__.lower()
            return self.rounded(rebuild(node, kids), eps, ErrorSource.OPERATION, name)
        if isinstance(node, Sqrt):
            return self.rounded(Sqrt(kids[0]), eps, ErrorSource.SQRT, "sqrt")
        if isinstance(node, Transc):
            return self.rounded(
                Transc(node.kind, kids[0]),
                self.fmt.transc_eps(node.kind),
                ErrorSource.TRANSCENDENTAL,
                node.kind.value,
            )
        if isinstance(node, IfThenElse):
            cond = self(condition_expr(node))
            return IfThenElse(node.cond, kids[0], kids[1], cond)
        raise TypeError(f"unexpected node {type(node).__name__}")


def round_expr(
    expr: Expr,
    fmt: FpFormat,
    options: Optional[RoundingOptions] = None,
    n: Optional[int] = None,
) -> RoundedExpr:
    """Build the rounded counterpart of ``expr``.

    Identical subexpressions share their error variables. ``n`` defaults to
    one past the largest free input index.
    """
    options = options or RoundingOptions()
    exact = inline_lets(expr) if any(isinstance(x, Let) for x in walk(expr)) else expr
    if n is None:
        n = max(free_variables(exact), default=-1) + 1
    rounder = _Rounder(n, fmt, options)
    body = rounder(exact)
    result = RoundedExpr(body, n, tuple(rounder.errors), exact, fmt)
    if options.merge:
        from roundsos.rounding.merge import merge_error_products

        result = merge_error_products(result, options.merge_bound)
    logger.debug("Rounded expression", inputs=n, errors=result.m, precision=fmt.precision)
    return result


def renumber(rexpr: RoundedExpr, extra: Sequence[ErrorVar] = ()) -> RoundedExpr:
    """Number error variables by first occurrence in post-order, dropping unused ones."""
    by_index = {ev.id: ev for ev in (*rexpr.errors, *extra)}
    order: list[int] = []
    seen: set[int] = set()
    for node in walk(rexpr.body):
        if isinstance(node, Var) and node.index >= rexpr.n and node.index not in seen:
            seen.add(node.index)
            order.append(node.index)
    mapping = {old: rexpr.n + pos for pos, old in enumerate(order)}
    body = substitute(rexpr.body, {old: Var(new) for old, new in mapping.items() if old != new})
    errors = tuple(replace(by_index[old], id=mapping[old]) for old in order)
    return replace(rexpr, body=body, errors=errors)


def apply_uncertainties(rexpr: RoundedExpr, u: Sequence[Fraction]) -> RoundedExpr:
    """Give each input with ``u_i > 0`` a relative error ``|e| <= u_i``.

    The factor is shared by every occurrence of ``x_i`` and composes with input
    rounding when that is on.
    """
    if not any(u):
        return rexpr
    next_index = rexpr.n + rexpr.m
    mapping: dict[int, Expr] = {}
    extra: list[ErrorVar] = []
    for i, ui in enumerate(u):
        if ui > 0:
            ev = ErrorVar(next_index, Fraction(ui), ErrorSource.UNCERTAINTY, f"uncertainty x{i}")
            extra.append(ev)
            mapping[i] = Mul(Var(i), one_plus(next_index))
            next_index += 1
    body = substitute(rexpr.body, mapping)
    return renumber(replace(rexpr, body=body), extra)
