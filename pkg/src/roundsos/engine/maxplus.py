"""Quadratic under- and over-estimators of transcendental functions.

Around each sample point ``x_i`` the pieces are

    f-_i(x) = f(x_i) + f'(x_i)(x - x_i) - (g-/2)(x - x_i)^2
    f+_i(x) = f(x_i) + f'(x_i)(x - x_i) + (g+/2)(x - x_i)^2

with ``g- >= sup(-f'')`` and ``g+ >= sup(f'')`` on the interval, so that
``max_i f-_i <= f <= min_i f+_i`` there. Function and derivative values come
from rigorous enclosures; their widths are absorbed into each piece.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import structlog

from roundsos.config.constants import TranscKind
from roundsos.core.exceptions import DomainViolation
from roundsos.interval import Interval
from roundsos.interval.bounds import ia_bound
from roundsos.interval.transcendental import enclose_at
from roundsos.polynomial import Poly
from roundsos.program.ast import Transc, Var
from roundsos.program.symbolic import simplify, symbolic_diff

logger = structlog.get_logger()


@dataclass(frozen=True)
class MaxplusApprox:
    """Pieces are univariate polynomials in ``x0``."""

    kind: TranscKind
    interval: Interval
    points: tuple[Fraction, ...]
    gamma_lower: Fraction
    gamma_upper: Fraction
    lower: tuple[Poly, ...]
    upper: tuple[Poly, ...]

    @property
    def gamma(self) -> Fraction:
        return self.gamma_lower

    def lower_value(self, x: Fraction) -> Fraction:
        return max(p.evaluate([x]) for p in self.lower)

    def upper_value(self, x: Fraction) -> Fraction:
        return min(p.evaluate([x]) for p in self.upper)

    def lower_at(self, arg: Poly) -> list[Poly]:
        """Lower pieces composed with ``arg``."""
        return [p.substitute(0, arg) for p in self.lower]

    def upper_at(self, arg: Poly) -> list[Poly]:
        return [p.substitute(0, arg) for p in self.upper]


def default_points(iv: Interval, count: int = 3) -> list[Fraction]:
    """``count`` evenly spaced points including both endpoints (the midpoint when ``count`` is 1)."""
    if count <= 1 or iv.is_point():
        return [iv.mid]
    step = iv.width / (count - 1)
    return [iv.lo + k * step for k in range(count)]


def transc_approx(
    kind: TranscKind,
    iv: Interval,
    points: Optional[Sequence[Fraction]] = None,
    count: int = 3,
) -> MaxplusApprox:
    """Maxplus sandwich of ``kind`` on ``iv``.

    Raises:
        DomainViolation: if ``iv`` leaves the function's domain or a point
            lies outside ``iv``.
    """
    pts = [Fraction(p) for p in points] if points is not None else default_points(iv, count)
    if not pts:
        raise DomainViolation("maxplus approximation needs at least one point", op=kind.value)
    for p in pts:
        if not iv.contains(p):
            raise DomainViolation(f"sample point {p} outside [{iv.lo}, {iv.hi}]", op=kind.value)

    f = Transc(kind, Var(0))
    ia_bound(f, [iv])  # raises DomainViolation outside the domain
    d1 = simplify(symbolic_diff(f, 0))
    d2 = simplify(symbolic_diff(d1, 0))
    second = ia_bound(d2, [iv])
    gamma_lower = max(Fraction(0), -second.lo)
    gamma_upper = max(Fraction(0), second.hi)

    x = Poly.var(0)
    lower: list[Poly] = []
    upper: list[Poly] = []
    for p in pts:
        f_lo, f_hi = enclose_at(kind, p)
        slope = ia_bound(d1, [Interval.point(p)])
        reach = max(abs(iv.lo - p), abs(iv.hi - p))
        slack = (slope.width / 2) * reach
        t = x - p
        linear = t * slope.mid
        lower.append(linear + (f_lo - slack) - (t * t).scale(gamma_lower / 2))
        upper.append(linear + (f_hi + slack) + (t * t).scale(gamma_upper / 2))
    logger.debug(
        "Built maxplus approximation",
        kind=kind.value,
        points=len(pts),
        gamma_lower=float(gamma_lower),
        gamma_upper=float(gamma_upper),
    )
    return MaxplusApprox(
        kind=kind,
        interval=iv,
        points=tuple(pts),
        gamma_lower=gamma_lower,
        gamma_upper=gamma_upper,
        lower=tuple(lower),
        upper=tuple(upper),
    )
