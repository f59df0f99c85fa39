"""Enclose the linear part ``l = sum_j s_j(x) e_j`` of the roundoff error.

Each error variable ranges over ``[-b_j, b_j]``. With ``eps = max_j b_j`` and
``e_j = b_j e'_j`` the problem becomes

    l = eps * sum_j (b_j / eps) s_j(x) e'_j,    e' in [-1, 1]^m

so the relaxation works with coefficients of order one. ``l`` is odd in the
error variables, so its enclosure is symmetric and a single maximization
gives both sides; the certificate for the other side is the same one with
``e' -> -e'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

import structlog

from roundsos.certify.certificate import CertConstraint, SosCertificate, SosMultiplier, SosTerm
from roundsos.certify.check import CheckResult, check_certificate
from roundsos.config.constants import Sense
from roundsos.core.exceptions import RoundSosError
from roundsos.engine.lift import lift
from roundsos.engine.optimize import poly_range, run_relaxation
from roundsos.engine.options import EngineOptions
from roundsos.interval import Interval
from roundsos.interval.bounds import ia_bound
from roundsos.polynomial import Poly
from roundsos.program.ast import Expr
from roundsos.relax.builder import build_linear_part_relaxation
from roundsos.relax.constraints import ConstraintSet

logger = structlog.get_logger()


@dataclass
class LinearPartResult:
    interval: Interval
    order: Optional[int] = None
    certificates: list[SosCertificate] = field(default_factory=list)
    checks: list[CheckResult] = field(default_factory=list)
    fallbacks: list[str] = field(default_factory=list)
    chunks: int = 0


def linear_order(coeffs: Sequence[Poly], requested: Optional[int] = None) -> int:
    """Smallest order representing every ``s_j e_j`` and the box quadratics."""
    minimal = max([1, *((c.degree() + 2) // 2 for c in coeffs)])
    return max(requested or minimal, minimal)


def chunk_size(n: int, d: int, options: EngineOptions) -> int:
    """Error terms per relaxation so that the moment variables stay within budget.

    Every clique ``{x, e_j}`` costs ``binom(n + 1 + 2d, 2d)`` moment variables.
    """
    per_term = math.comb(n + 1 + 2 * d, 2 * d)
    return min(options.max_errors_per_relaxation, max(1, options.max_moment_variables // per_term))


def mirrored(cert: SosCertificate, error_vars: Sequence[int]) -> SosCertificate:
    """Certificate of the opposite side under ``e -> -e``.

    Valid because ``l`` is odd in ``e`` and every constraint on the error
    variables is even.
    """

    def flip(p: Poly) -> Poly:
        for v in error_vars:
            p = p.flip_sign(v)
        return p

    multipliers = tuple(
        SosMultiplier(
            m.label,
            flip(m.multiplier),
            tuple(SosTerm(t.weight, flip(t.square)) for t in m.terms),
        )
        for m in cert.multipliers
    )
    constraints = tuple(CertConstraint(c.label, flip(c.g)) for c in cert.constraints)
    sense = Sense.MIN if cert.sense == Sense.MAX else Sense.MAX
    label = cert.label.replace("upper", "lower") if "upper" in cert.label else f"{cert.label} mirrored"
    return replace(
        cert,
        label=label,
        objective=flip(cert.objective),
        multipliers=multipliers,
        sense=sense,
        constraints=constraints,
    )


def _interval_fallback(coeffs: Sequence[Poly], box: Sequence[Interval]) -> Fraction:
    return sum((c.evaluate_interval(box).mag for c in coeffs), Fraction(0))


def sdp_poly(
    s: Sequence[Poly],
    X: ConstraintSet,
    magnitudes: Sequence[Fraction],
    options: EngineOptions,
    label: str = "linear",
) -> LinearPartResult:
    """Symmetric enclosure of ``sum_j s_j e_j`` over ``X`` with ``|e_j| <= magnitudes[j]``.

    Terms with a zero coefficient are dropped. When the relaxation for all
    terms would exceed the moment-variable budget, terms are split into chunks
    whose maxima are summed. A chunk whose solve fails is bounded by interval
    arithmetic and recorded as a fallback.
    """
    terms = [(c, b) for c, b in zip(s, magnitudes) if not c.is_zero() and b != 0]
    if not terms:
        return LinearPartResult(Interval.point(0))
    eps = max(b for _, b in terms)
    coeffs = [c.scale(b / eps) for c, b in terms]
    n = X.nvars
    d = linear_order(coeffs, options.order)
    k = chunk_size(n, d, options)
    result = LinearPartResult(Interval.point(0), order=d)

    total = Fraction(0)
    for start in range(0, len(coeffs), k):
        chunk = coeffs[start : start + k]
        name = f"{label} {start // k} upper"
        result.chunks += 1
        try:
            prog = build_linear_part_relaxation(chunk, X, d, Sense.MAX)
        except RoundSosError as e:
            logger.warning("Could not build linear-part relaxation", label=name, error=e.message)
            prog = None
        outcome = run_relaxation(prog, options, name, scale=eps, eps=eps) if prog is not None else None
        if outcome is None or outcome.value is None:
            result.fallbacks.append(name)
            total += _interval_fallback(chunk, X.box)
            continue
        total += max(outcome.value, Fraction(0))
        if outcome.certificate is not None and outcome.check is not None:
            other = mirrored(outcome.certificate, range(n, n + len(chunk)))
            result.certificates.extend([outcome.certificate, other])
            checked = check_certificate(other.objective, outcome.program.constraints, other)
            result.checks.extend([outcome.check, checked])

    result.interval = Interval.symmetric(eps * total)
    logger.debug(
        "Bounded linear part",
        label=label,
        terms=len(coeffs),
        chunks=result.chunks,
        order=d,
        bound=float(result.interval.hi),
        fallbacks=len(result.fallbacks),
    )
    return result


def semialgebraic_linear_part(
    s: Sequence[Expr],
    X: ConstraintSet,
    magnitudes: Sequence[Fraction],
    options: EngineOptions,
    label: str = "linear",
) -> LinearPartResult:
    """Enclose ``sum_j s_j e_j`` when some ``s_j`` is not polynomial.

    Each ``s_j`` is lifted and its range bounded on its own, so the result is
    ``sum_j b_j * max |s_j|`` over ``X``.
    """
    result = LinearPartResult(Interval.point(0))
    total = Fraction(0)
    for j, (expr, b) in enumerate(zip(s, magnitudes)):
        if b == 0:
            continue
        name = f"{label} term {j}"
        try:
            lifted = lift(expr, X, options.maxplus_points)
        except RoundSosError as e:
            logger.warning("Could not lift error coefficient", label=name, error=e.message)
            result.fallbacks.append(name)
            total += b * ia_bound(expr, X.box).mag
            continue
        rng = poly_range(lifted.objective, lifted.constraints, options, name, relaxed=lifted.is_relaxed)
        result.fallbacks.extend(rng.fallbacks)
        if rng.order is not None:
            result.order = max(result.order or 0, rng.order)
        for o in rng.outcomes:
            if o.certificate is not None and o.check is not None:
                result.certificates.append(o.certificate)
                result.checks.append(o.check)
        total += b * rng.interval.mag
        result.chunks += 1
    result.interval = Interval.symmetric(total)
    logger.debug(
        "Bounded lifted linear part",
        label=label,
        terms=result.chunks,
        bound=float(total),
        fallbacks=len(result.fallbacks),
    )
    return result
