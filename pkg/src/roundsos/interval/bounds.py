"""Interval enclosures of expressions and of second-order Taylor remainders."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence, Union

import structlog

from roundsos.config.constants import TranscKind
from roundsos.interval.arith import TRANSCENDENTAL, Interval, sqrt
from roundsos.program.ast import Expr, free_variables
from roundsos.program.evaluate import evaluate
from roundsos.program.symbolic import simplify, symbolic_diff
from roundsos.rounding.model import RoundedExpr

logger = structlog.get_logger()

Box = Union[Sequence[Interval], Mapping[int, Interval]]


class IntervalSemantics:
    """Naive interval evaluation; both branches are joined when the condition is undecided."""

    def const(self, value: Fraction) -> Interval:
        return Interval.point(value)

    def add(self, a: Interval, b: Interval) -> Interval:
        return a + b

    def sub(self, a: Interval, b: Interval) -> Interval:
        return a - b

    def mul(self, a: Interval, b: Interval) -> Interval:
        return a * b

    def div(self, a: Interval, b: Interval) -> Interval:
        return a / b

    def neg(self, a: Interval) -> Interval:
        return -a

    def sqrt(self, a: Interval) -> Interval:
        return sqrt(a)

    def transc(self, kind: TranscKind, a: Interval) -> Interval:
        return TRANSCENDENTAL[kind](a)

    def select(
        self, cond: Interval, then: Callable[[], Interval], orelse: Callable[[], Interval]
    ) -> Interval:
        if cond.lo >= 0:
            return then()
        if cond.hi < 0:
            return orelse()
        return then().hull(orelse())


def ia_bound(expr: Expr, box: Box) -> Interval:
    """Enclosure of the range of ``expr`` over ``box`` by recursive interval evaluation.

    Raises:
        DivisionByZeroInterval: if a denominator enclosure contains zero.
        DomainViolation: if a square root, logarithm or inverse trigonometric
            argument leaves its domain.
    """
    return evaluate(expr, box, IntervalSemantics())


def taylor_remainder_bound(
    rexpr: RoundedExpr,
    box: Sequence[Interval],
    first: Optional[Sequence[Expr]] = None,
) -> Interval:
    """``[-B, B]`` enclosing the error beyond its linear part in the error variables.

    ``B = 1/2 * sum_{i,j} sup |d2 r / de_i de_j| * b_i * b_j`` with each supremum
    taken by :func:`ia_bound` over the input box times the error box.
    ``first`` may pass precomputed ``d body / d e_i`` in error order.
    """
    full = rexpr.full_box(box)
    indices = list(rexpr.error_indices)
    if first is None:
        first = [simplify(symbolic_diff(rexpr.body, i)) for i in indices]
    total = Fraction(0)
    for a, i in enumerate(indices):
        d_i = first[a]
        free = free_variables(d_i)
        for j in indices[a:]:
            if j not in free:
                continue
            h_ij = simplify(symbolic_diff(d_i, j))
            sup = ia_bound(h_ij, full).mag
            weight = 1 if i == j else 2
            total += weight * sup * rexpr.magnitude(i) * rexpr.magnitude(j)
    bound = total / 2
    logger.debug("Bounded Taylor remainder", errors=len(indices), bound=float(bound))
    return Interval.symmetric(bound)
