"""Exact certificate checking."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import structlog

from roundsos.certify.certificate import CertificateBundle, SosCertificate
from roundsos.core.exceptions import MalformedCertificate
from roundsos.interval import Interval
from roundsos.polynomial import Poly
from roundsos.relax.constraints import ConstraintSet, ball_bound, box_quadratic

logger = structlog.get_logger()


@dataclass(frozen=True)
class CheckResult:
    """``certified_bound = mu + lower(residual)`` holds on ``K`` whatever the solver did.

    ``passed`` says the certified bound is within ``tolerance`` of the claimed
    ``mu``. ``assumptions`` names constraints the claim rests on that could not
    be derived from the box or matched against the program.
    """

    passed: bool
    certified_bound: Fraction
    residual: Interval
    relaxed: bool
    claimed: Fraction
    label: str = ""
    assumptions: tuple[str, ...] = ()

    @property
    def status(self) -> str:
        if not self.passed:
            return "failed"
        if self.assumptions:
            return "checked-assuming"
        return "checked-relaxed" if self.relaxed else "checked"

    @property
    def trusted(self) -> bool:
        return self.passed and not self.assumptions


def _is_ball(g: Poly, box: Sequence[Interval]) -> bool:
    """``c - sum_{i in S} x_i^2`` with ``c >= sum_{i in S} mag(box_i)^2``."""
    squares: list[int] = []
    for mono, coeff in g.terms.items():
        if not mono:
            continue
        if coeff != -1 or len(mono) != 1 or mono[0][1] != 2 or mono[0][0] >= len(box):
            return False
        squares.append(mono[0][0])
    return bool(squares) and g.constant_term >= sum((box[i].mag ** 2 for i in squares), Fraction(0))


def holds_on_box(g: Poly, box: Sequence[Interval]) -> bool:
    """Whether ``g >= 0`` on all of ``box`` follows from the box alone.

    Recognizes the box quadratics, ball closures and anything whose interval
    enclosure is nonnegative.
    """
    if any(v >= len(box) for v in g.variables()):
        return False
    n = len(box)
    if any(g == box_quadratic(i, iv, n) for i, iv in enumerate(box) if not iv.is_point()):
        return True
    if _is_ball(g, box):
        return True
    return g.evaluate_interval(box).lo >= 0


def _validate(obj: Optional[Poly], K: Optional[ConstraintSet], cert: SosCertificate) -> tuple[str, ...]:
    """Structural checks; returns the labels of constraints taken on trust."""
    if obj is not None and obj != cert.objective:
        raise MalformedCertificate("certificate was issued for another objective", details={"label": cert.label})
    allowed = set(K.g) if K is not None else {c.g for c in cert.constraints}
    assumptions: list[str] = []
    for mult in cert.multipliers:
        for term in mult.terms:
            if term.weight < 0:
                raise MalformedCertificate(
                    "negative weight in SOS multiplier",
                    details={"label": cert.label, "multiplier": mult.label, "weight": str(term.weight)},
                )
        if mult.multiplier == Poly.const(1):
            continue
        if mult.multiplier not in allowed:
            raise MalformedCertificate(
                "multiplier is not attached to a constraint of the set",
                details={"label": cert.label, "multiplier": mult.label},
            )
        if K is None and not holds_on_box(mult.multiplier, cert.box):
            name = cert.constraint_label(mult.multiplier) or mult.label
            if name not in assumptions:
                assumptions.append(name)
    return tuple(assumptions)


def check_certificate(
    obj: Optional[Poly],
    K: Optional[ConstraintSet],
    cert: SosCertificate,
    box: Optional[Sequence[Interval]] = None,
    tolerance: Fraction = Fraction(1, 10**6),
) -> CheckResult:
    """Bound ``obj`` below on ``K`` using ``cert`` with no trust in the solver.

    The residual ``obj - mu - sum_j sigma_j g_j`` is computed exactly and
    enclosed over ``box`` (default: the certificate's box) by interval
    evaluation. ``obj`` defaults to the certificate's objective. Without
    ``K`` every multiplier must sit on a constraint the certificate lists,
    and listed constraints that do not hold on the whole box are reported as
    assumptions.

    Raises:
        MalformedCertificate: on negative weights, a multiplier without a
            matching constraint, or an objective mismatch.
    """
    assumptions = _validate(obj, K, cert)
    residual = cert.residual()
    region = tuple(box) if box is not None else cert.box
    if residual.nvars > len(region):
        raise MalformedCertificate(
            "certificate box does not cover every variable",
            details={"label": cert.label, "variables": residual.nvars, "box": len(region)},
        )
    enclosure = residual.evaluate_interval(region) if not residual.is_zero() else Interval.point(0)
    certified = cert.mu + enclosure.lo
    passed = cert.mu - certified <= tolerance * max(Fraction(1), abs(cert.mu))
    logger.debug(
        "Checked certificate",
        label=cert.label,
        passed=passed,
        mu=float(cert.mu),
        residual_lo=float(enclosure.lo),
        residual_hi=float(enclosure.hi),
        assumptions=len(assumptions),
    )
    return CheckResult(
        passed=passed,
        certified_bound=certified,
        residual=enclosure,
        relaxed=cert.relaxed,
        claimed=cert.mu,
        label=cert.label,
        assumptions=assumptions,
    )


def constraint_set(cert: SosCertificate) -> ConstraintSet:
    """The constraints ``cert`` lists, over its box."""
    return ConstraintSet(
        tuple(c.g for c in cert.constraints),
        tuple(c.label for c in cert.constraints),
        cert.box,
        ball_bound(cert.box),
    )


def _counterpart(cert: SosCertificate, expected: Sequence[SosCertificate]) -> SosCertificate:
    for ref in expected:
        if (
            ref.label == cert.label
            and ref.box == cert.box
            and ref.objective == cert.objective
            and ref.sense == cert.sense
            and (ref.scale, ref.eps, ref.relaxed) == (cert.scale, cert.eps, cert.relaxed)
        ):
            return ref
    raise MalformedCertificate(
        "certificate matches no relaxation of the program",
        details={"label": cert.label, "benchmark": cert.benchmark},
    )


def check_bundle(
    bundle: CertificateBundle,
    tolerance: Fraction = Fraction(1, 10**6),
    expected: Optional[Sequence[SosCertificate]] = None,
) -> list[CheckResult]:
    """Check every certificate of ``bundle``.

    With ``expected`` (the certificates a fresh analysis of the program
    produces) each one must match a counterpart in label, box, objective and
    reading, and is checked against the counterpart's constraint set. Without
    it, each is checked against the constraints it lists.

    Raises:
        MalformedCertificate: on a structural defect or, with ``expected``, a
            certificate for another benchmark or relaxation.
    """
    if expected is None:
        return [check_certificate(None, None, cert, tolerance=tolerance) for cert in bundle]
    results = []
    for cert in bundle:
        ref = _counterpart(cert, expected)
        if ref.benchmark and cert.benchmark != ref.benchmark:
            raise MalformedCertificate(
                "certificate was issued for another benchmark",
                details={"label": cert.label, "benchmark": cert.benchmark, "expected": ref.benchmark},
            )
        checked = check_certificate(ref.objective, constraint_set(ref), cert, box=ref.box, tolerance=tolerance)
        results.append(checked)
    return results
