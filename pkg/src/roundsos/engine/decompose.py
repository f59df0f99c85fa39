"""Split the roundoff error into constant, linear and remainder parts.

With ``r(x, e) = f_hat(x, e) - f(x)``:

    r(x, e) = r(x, 0) + sum_j s_j(x) e_j + h(x, e),   s_j = dr/de_j (x, 0)

``h`` is enclosed by the second-order Taylor bound; ``r(x, 0)`` is zero unless
the rounded and exact expressions take different branches.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import structlog

from roundsos.interval import Interval
from roundsos.interval.bounds import taylor_remainder_bound
from roundsos.polynomial import Poly
from roundsos.program.ast import Const, Expr, Var
from roundsos.program.symbolic import (
    expr_to_poly,
    is_polynomial,
    mk_add,
    mk_mul,
    mk_sub,
    simplify,
    substitute,
    symbolic_diff,
)
from roundsos.rounding.model import RoundedExpr

logger = structlog.get_logger()

ZERO = Const(Fraction(0))


@dataclass(frozen=True)
class ErrorDecomposition:
    rexpr: RoundedExpr
    r: Expr
    s: tuple[Expr, ...]
    constant: Expr
    h_bound: Interval

    @property
    def m(self) -> int:
        return len(self.s)

    @property
    def magnitudes(self) -> tuple[Fraction, ...]:
        return tuple(ev.magnitude for ev in self.rexpr.errors)

    def linear_part(self) -> Expr:
        """``sum_j s_j(x) e_j`` as an expression."""
        total: Expr = ZERO
        for j, s in enumerate(self.s):
            total = mk_add(total, mk_mul(s, Var(self.rexpr.n + j)))
        return total

    def has_constant_part(self) -> bool:
        return not (isinstance(self.constant, Const) and self.constant.value == 0)

    def s_polys(self) -> Optional[list[Poly]]:
        """Coefficients as polynomials in the inputs, or None if one is not polynomial."""
        if not all(is_polynomial(s) for s in self.s):
            return None
        return [expr_to_poly(s, self.rexpr.n) for s in self.s]


def decompose(rexpr: RoundedExpr, box: Sequence[Interval]) -> ErrorDecomposition:
    """Constant part, linear coefficients ``s_j`` and remainder enclosure of ``rexpr``.

    Raises:
        NonDifferentiable: if the rounded body still holds a conditional.
    """
    zero_errors = {i: ZERO for i in rexpr.error_indices}
    first = [simplify(symbolic_diff(rexpr.body, i)) for i in rexpr.error_indices]
    s = tuple(substitute(d, zero_errors, simplify_result=True) for d in first)
    at_zero = substitute(rexpr.body, zero_errors, simplify_result=True)
    constant = simplify(mk_sub(at_zero, rexpr.exact))
    if is_polynomial(constant) and expr_to_poly(constant, rexpr.n).is_zero():
        constant = ZERO
    h_bound = taylor_remainder_bound(rexpr, box, first) if rexpr.m else Interval.point(0)
    logger.debug(
        "Decomposed roundoff error",
        errors=rexpr.m,
        zero_coefficients=sum(1 for c in s if isinstance(c, Const) and c.value == 0),
        remainder=float(h_bound.hi),
    )
    return ErrorDecomposition(
        rexpr=rexpr,
        r=mk_sub(rexpr.body, rexpr.exact),
        s=s,
        constant=constant,
        h_bound=h_bound,
    )
