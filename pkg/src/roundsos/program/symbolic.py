"""Symbolic utilities on expressions: simplification, substitution, differentiation."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Optional

from roundsos.config.constants import TranscKind
from roundsos.core.exceptions import NonDifferentiable, NotPolynomial
from roundsos.polynomial import Poly
from roundsos.program.ast import (
    ONE_EXPR,
    ZERO,
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
    transform,
    walk,
)

# Smart constructors


def _is_const(e: Expr, value: Optional[int] = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def mk_neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mk_add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if isinstance(b, Neg):
        return mk_sub(a, b.arg)
    return Add(a, b)


def mk_sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return mk_neg(b)
    if a == b:
        return ZERO
    if isinstance(b, Neg):
        return mk_add(a, b.arg)
    return Sub(a, b)


def mk_mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a, -1):
        return mk_neg(b)
    if _is_const(b, -1):
        return mk_neg(a)
    if isinstance(a, Neg):
        return mk_neg(mk_mul(a.arg, b))
    if isinstance(b, Neg):
        return mk_neg(mk_mul(a, b.arg))
    return Mul(a, b)


def mk_div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0):
        return ZERO
    if _is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    return Div(a, b)


def _smart_rebuild(node: Expr, kids: tuple[Expr, ...]) -> Expr:
    if isinstance(node, Neg):
        return mk_neg(kids[0])
    if isinstance(node, Add):
        return mk_add(*kids)
    if isinstance(node, Sub):
        return mk_sub(*kids)
    if isinstance(node, Mul):
        return mk_mul(*kids)
    if isinstance(node, Div):
        return mk_div(*kids)
    if isinstance(node, Let):
        if node.index not in free_variables(kids[1]):
            return kids[1]
        if isinstance(kids[0], (Const, Var)):
            return substitute(kids[1], {node.index: kids[0]})
    return rebuild(node, kids)


def simplify(expr: Expr) -> Expr:
    """Fold constants and drop neutral elements, bottom-up."""
    return transform(expr, _smart_rebuild)


def substitute(expr: Expr, mapping: Mapping[int, Expr], simplify_result: bool = False) -> Expr:
    """Replace free occurrences of ``Var(i)`` by ``mapping[i]``.

    Let indices are unique along a path, so bound occurrences never clash
    with the mapping keys used by callers.
    """
    if not mapping:
        return simplify(expr) if simplify_result else expr

    def rewrite(node: Expr, kids: tuple[Expr, ...]) -> Expr:
        if isinstance(node, Var):
            return mapping.get(node.index, node)
        if simplify_result:
            return _smart_rebuild(node, kids)
        return rebuild(node, kids)

    return transform(expr, rewrite)


def inline_lets(expr: Expr) -> Expr:
    """Eliminate ``Let`` nodes; repeated bindings stay shared in the DAG."""

    def rewrite(node: Expr, kids: tuple[Expr, ...]) -> Expr:
        if isinstance(node, Let):
            return substitute(kids[1], {node.index: kids[0]})
        return rebuild(node, kids)

    return transform(expr, rewrite)


# Differentiation


class _Differentiator:
    def __init__(self, var: int) -> None:
        self.var = var
        self.memo: dict[Expr, Expr] = {}

    def __call__(self, node: Expr) -> Expr:
        cached = self.memo.get(node)
        if cached is not None:
            return cached
        result = self._rule(node)
        self.memo[node] = result
        return result

    def _rule(self, node: Expr) -> Expr:
        if isinstance(node, Const):
            return ZERO
        if isinstance(node, Var):
            return ONE_EXPR if node.index == self.var else ZERO
        if isinstance(node, Neg):
            return mk_neg(self(node.arg))
        if isinstance(node, Add):
            return mk_add(self(node.left), self(node.right))
        if isinstance(node, Sub):
            return mk_sub(self(node.left), self(node.right))
        if isinstance(node, Mul):
            a, b = node.left, node.right
            return mk_add(mk_mul(self(a), b), mk_mul(a, self(b)))
        if isinstance(node, Div):
            a, b = node.left, node.right
            da, db = self(a), self(b)
            if _is_const(db, 0):
                return mk_div(da, b)
            return mk_div(mk_sub(mk_mul(da, b), mk_mul(a, db)), mk_mul(b, b))
        if isinstance(node, Sqrt):
            return mk_div(self(node.arg), mk_mul(Const(Fraction(2)), node))
        if isinstance(node, Transc):
            return mk_mul(self(node.arg), _outer_derivative(node))
        if isinstance(node, Let):
            d_body = self(node.body)
            d_bound = symbolic_diff(node.body, node.index)
            total = mk_add(d_body, mk_mul(d_bound, self(node.binding)))
            if node.index in free_variables(total):
                return Let(node.index, node.binding, total)
            return total
        if isinstance(node, IfThenElse):
            raise NonDifferentiable(
                "cannot differentiate through a conditional",
                details={"variable": self.var},
            )
        raise TypeError(f"unexpected node {type(node).__name__}")


def _outer_derivative(node: Transc) -> Expr:
    """``f'(a)`` for ``node = f(a)``."""
    a = node.arg
    one = ONE_EXPR
    kind = node.kind
    if kind == TranscKind.EXP:
        return node
    if kind == TranscKind.LOG:
        return mk_div(one, a)
    if kind == TranscKind.SIN:
        return Transc(TranscKind.COS, a)
    if kind == TranscKind.COS:
        return mk_neg(Transc(TranscKind.SIN, a))
    if kind == TranscKind.TAN:
        return mk_add(one, mk_mul(node, node))
    if kind == TranscKind.ATAN:
        return mk_div(one, mk_add(one, mk_mul(a, a)))
    root = Sqrt(mk_sub(one, mk_mul(a, a)))
    if kind == TranscKind.ASIN:
        return mk_div(one, root)
    return mk_neg(mk_div(one, root))


def symbolic_diff(expr: Expr, var: int) -> Expr:
    """Exact partial derivative of ``expr`` with respect to ``Var(var)``.

    Raises:
        NonDifferentiable: if a conditional is reached.
    """
    return _Differentiator(var)(expr)


# Polynomial views


def expr_to_poly(expr: Expr, nvars: int = 0) -> Poly:
    """Expand a polynomial expression exactly.

    Raises:
        NotPolynomial: on division by a non-constant, square roots,
            transcendental calls or conditionals.
    """
    flat = inline_lets(expr) if any(isinstance(n, Let) for n in walk(expr)) else expr
    memo: dict[Expr, Poly] = {}
    for node in walk(flat):
        if node in memo:
            continue
        if isinstance(node, Const):
            memo[node] = Poly.const(node.value, nvars)
        elif isinstance(node, Var):
            memo[node] = Poly.var(node.index, nvars)
        elif isinstance(node, Neg):
            memo[node] = -memo[node.arg]
        elif isinstance(node, Add):
            memo[node] = memo[node.left] + memo[node.right]
        elif isinstance(node, Sub):
            memo[node] = memo[node.left] - memo[node.right]
        elif isinstance(node, Mul):
            memo[node] = memo[node.left] * memo[node.right]
        elif isinstance(node, Div) and memo[node.right].is_constant() and not memo[node.right].is_zero():
            memo[node] = memo[node.left].scale(1 / memo[node.right].constant_term)
        else:
            raise NotPolynomial(
                f"{type(node).__name__} node is not polynomial",
                details={"node": type(node).__name__},
            )
    return memo[flat].with_nvars(nvars)


def is_polynomial(expr: Expr) -> bool:
    try:
        expr_to_poly(expr)
    except NotPolynomial:
        return False
    return True


def degree(expr: Expr) -> Optional[int]:
    """Total degree, or ``None`` when the expression is not polynomial."""
    try:
        return expr_to_poly(expr).degree()
    except NotPolynomial:
        return None


def _monomial_expr(mono: tuple[tuple[int, int], ...]) -> Expr:
    acc: Optional[Expr] = None
    for v, e in mono:
        for _ in range(e):
            acc = Var(v) if acc is None else Mul(acc, Var(v))
    return acc if acc is not None else ONE_EXPR


def poly_to_expr(poly: Poly) -> Expr:
    """Sum of ``c * x^a`` products in graded order, with subtraction for negative terms."""
    acc: Optional[Expr] = None
    for mono, c in poly.items_sorted():
        magnitude = abs(c) if acc is not None else c
        if not mono:
            term: Expr = Const(magnitude)
        elif magnitude == 1:
            term = _monomial_expr(mono)
        elif magnitude == -1:
            term = Neg(_monomial_expr(mono))
        else:
            term = Mul(Const(magnitude), _monomial_expr(mono))
        if acc is None:
            acc = term
        elif c < 0:
            acc = Sub(acc, term)
        else:
            acc = Add(acc, term)
    return acc if acc is not None else ZERO


def hoist_conditional(expr: Expr) -> Expr:
    """Move the single conditional of ``expr`` to the root.

    ``C[if p then g else h]`` becomes ``if p then C[g] else C[h]``; the
    condition expression has enclosing let-bindings inlined. Expressions
    without a conditional are returned unchanged.
    """
    conds = [node for node in walk(expr) if isinstance(node, IfThenElse)]
    if not conds or conds[0] is expr:
        return expr
    node = conds[0]
    bindings = {n.index: n.binding for n in walk(expr) if isinstance(n, Let)}
    cond_expr = node.cond_expr if node.cond_expr is not None else poly_to_expr(node.cond)
    while free_variables(cond_expr) & bindings.keys():
        cond_expr = substitute(cond_expr, bindings)

    def replace_with(branch: Expr) -> Expr:
        return transform(
            expr, lambda n, kids: branch if n == node else rebuild(n, kids)
        )

    return IfThenElse(node.cond, replace_with(node.then), replace_with(node.orelse), cond_expr)
