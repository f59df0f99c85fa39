"""Reduce semialgebraic and transcendental expressions to polynomial problems.

Every division, square root and transcendental call becomes a fresh variable
``z`` with a range from interval arithmetic and polynomial inequalities that
hold on the graph of the operation:

    g / h      z*h - g >= 0,  g - z*h >= 0
    sqrt(g)    z^2 - g >= 0,  g - z^2 >= 0
    f(g)       z - f-_i(g) >= 0,  f+_i(g) - z >= 0   (maxplus pieces)

The original point together with the true values of the lifted variables
always satisfies the lifted system, so bounds over it are sound.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import structlog

from roundsos.core.exceptions import DivisionByZeroInterval, NotPolynomial
from roundsos.engine.maxplus import transc_approx
from roundsos.interval import Interval
from roundsos.interval.bounds import ia_bound
from roundsos.polynomial import Poly
from roundsos.program.ast import (
    Add,
    Const,
    Div,
    Expr,
    Let,
    Mul,
    Neg,
    Sqrt,
    Sub,
    Transc,
    Var,
    walk,
)
from roundsos.program.printer import format_expr
from roundsos.program.symbolic import inline_lets
from roundsos.relax.constraints import ConstraintSet, ball_bound, box_quadratic

logger = structlog.get_logger()


def _show(node: Expr) -> str:
    return format_expr(node, lambda i: f"x{i}")


@dataclass(frozen=True)
class LiftedProblem:
    """``objective`` over ``constraints``; variables ``n..`` are lifting variables."""

    objective: Poly
    constraints: ConstraintSet
    n: int
    lifted: tuple[str, ...]

    @property
    def is_relaxed(self) -> bool:
        return bool(self.lifted)


class _Lifter:
    def __init__(self, X: ConstraintSet, maxplus_points: int) -> None:
        self.x_box = list(X.box)
        self.box = list(X.box)
        self.points = maxplus_points
        self.g: list[Poly] = []
        self.labels: list[str] = []
        self.lifted: list[str] = []
        self.memo: dict[Expr, Poly] = {}

    def fresh(self, node: Expr, iv: Interval) -> Poly:
        index = len(self.box)
        self.box.append(iv)
        self.lifted.append(_show(node))
        return Poly.var(index)

    def add(self, p: Poly, what: str) -> None:
        self.g.append(p)
        self.labels.append(f"lift {len(self.lifted) - 1} {what}")

    def __call__(self, root: Expr) -> Poly:
        for node in walk(root):
            if node not in self.memo:
                self.memo[node] = self.visit(node)
        return self.memo[root]

    def visit(self, node: Expr) -> Poly:
        if isinstance(node, Const):
            return Poly.const(node.value)
        if isinstance(node, Var):
            return Poly.var(node.index)
        if isinstance(node, Neg):
            return -self.memo[node.arg]
        if isinstance(node, Add):
            return self.memo[node.left] + self.memo[node.right]
        if isinstance(node, Sub):
            return self.memo[node.left] - self.memo[node.right]
        if isinstance(node, Mul):
            return self.memo[node.left] * self.memo[node.right]
        if isinstance(node, Div):
            num, den = self.memo[node.left], self.memo[node.right]
            if den.is_constant():
                if den.constant_term == 0:
                    raise DivisionByZeroInterval(
                        "division by zero constant", details={"expr": _show(node)}
                    )
                return num.scale(1 / den.constant_term)
            if ia_bound(node.right, self.x_box).contains_zero():
                raise DivisionByZeroInterval(
                    "denominator range contains zero",
                    details={"expr": _show(node.right)},
                )
            z = self.fresh(node, ia_bound(node, self.x_box))
            self.add(z * den - num, "lower")
            self.add(num - z * den, "upper")
            return z
        if isinstance(node, Sqrt):
            arg = self.memo[node.arg]
            iv = ia_bound(node, self.x_box)
            iv = Interval(max(iv.lo, Fraction(0)), max(iv.hi, Fraction(0)))
            z = self.fresh(node, iv)
            self.add(z * z - arg, "lower")
            self.add(arg - z * z, "upper")
            return z
        if isinstance(node, Transc):
            arg = self.memo[node.arg]
            approx = transc_approx(node.kind, ia_bound(node.arg, self.x_box), count=self.points)
            z = self.fresh(node, ia_bound(node, self.x_box))
            for i, piece in enumerate(approx.lower_at(arg)):
                self.add(z - piece, f"maxplus lower {i}")
            for i, piece in enumerate(approx.upper_at(arg)):
                self.add(piece - z, f"maxplus upper {i}")
            return z
        raise NotPolynomial(
            f"cannot lift {type(node).__name__} node", details={"expr": _show(node)}
        )


def lift(expr: Expr, X: ConstraintSet, maxplus_points: int = 3) -> LiftedProblem:
    """Polynomial objective and constraints whose range over the lifted set encloses ``expr`` over ``X``.

    Raises:
        DivisionByZeroInterval: if a denominator range contains zero.
        DomainViolation: if a square root or transcendental argument leaves its domain.
        NotPolynomial: if ``expr`` holds a conditional.
    """
    flat = inline_lets(expr) if any(isinstance(n, Let) for n in walk(expr)) else expr
    lifter = _Lifter(X, maxplus_points)
    objective = lifter(flat)

    total = len(lifter.box)
    base = X.without_closure()
    g = [p.with_nvars(total) for p in base.g]
    labels = list(base.labels)
    for k in range(X.nvars, total):
        iv = lifter.box[k]
        if not iv.is_point():
            g.append(box_quadratic(k, iv, total))
            labels.append(f"box z{k - X.nvars}")
    g.extend(p.with_nvars(total) for p in lifter.g)
    labels.extend(lifter.labels)
    box = tuple(lifter.box)
    constraints = ConstraintSet(tuple(g), tuple(labels), box, ball_bound(box))
    if lifter.lifted:
        logger.debug("Lifted expression", variables=len(lifter.lifted), constraints=len(lifter.g))
    return LiftedProblem(objective.with_nvars(total), constraints, X.nvars, tuple(lifter.lifted))


def lift_all(exprs: Sequence[Expr], X: ConstraintSet, maxplus_points: int = 3) -> list[LiftedProblem]:
    return [lift(e, X, maxplus_points) for e in exprs]
