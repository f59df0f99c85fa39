"""Solve relaxations and turn their values into bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

import structlog

from roundsos.certify.certificate import SosCertificate
from roundsos.certify.check import CheckResult, check_certificate
from roundsos.certify.extract import extract_certificate
from roundsos.config.constants import Sense
from roundsos.core.exceptions import RoundSosError, SolverError
from roundsos.engine.lift import lift
from roundsos.engine.options import EngineOptions
from roundsos.interval import Interval
from roundsos.polynomial import Poly
from roundsos.program.ast import Expr
from roundsos.program.symbolic import expr_to_poly, is_polynomial
from roundsos.relax.builder import SosProgram, build_sparse_relaxation, default_order
from roundsos.relax.constraints import ConstraintSet
from roundsos.sdp.problem import SdpSolution
from roundsos.sparsity.graph import csp_graph, maximal_cliques

logger = structlog.get_logger()


@dataclass
class RelaxationOutcome:
    """Result of one solve. ``value`` is a bound in the program's sense, None on failure.

    With certification on, ``value`` comes from the exact checker and is
    rigorous; otherwise it is the solver's floating-point optimum.
    """

    label: str
    program: SosProgram
    value: Optional[Fraction] = None
    certificate: Optional[SosCertificate] = None
    check: Optional[CheckResult] = None
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.value is not None


def _solve(prog: SosProgram, options: EngineOptions) -> SdpSolution:
    try:
        return options.solver(prog.sdp, options.params)
    except RoundSosError:
        raise
    except Exception as e:
        raise SolverError(
            f"solver raised {type(e).__name__}: {e}",
            details={"blocks": len(prog.sdp.dims), "constraints": prog.sdp.m},
        ) from e


def run_relaxation(
    prog: SosProgram,
    options: EngineOptions,
    label: str,
    relaxed: bool = False,
    scale: Fraction = Fraction(1),
    eps: Fraction = Fraction(0),
) -> RelaxationOutcome:
    """Solve ``prog``; certify the result when ``options.certify`` is set.

    Failures never raise: the outcome carries the reason and no value.
    """
    outcome = RelaxationOutcome(label=label, program=prog)
    try:
        sol = _solve(prog, options)
    except RoundSosError as e:
        logger.warning("SDP backend failed", label=label, error=e.message)
        outcome.reason = e.message
        return outcome
    if not sol.acceptable(options.accept_tol):
        logger.warning(
            "Relaxation not solved",
            label=label,
            status=sol.status.value,
            iterations=sol.iterations,
            gap=sol.gap,
        )
        outcome.reason = f"solver status {sol.status.value}"
        return outcome

    mu = prog.mu(sol)
    if not math.isfinite(mu):
        logger.warning("Relaxation value is not finite", label=label, mu=mu)
        outcome.reason = "solver value is not finite"
        return outcome
    lower = Fraction(mu)
    if options.certify:
        try:
            cert = extract_certificate(sol, prog, label=label, relaxed=relaxed)
        except (RoundSosError, ValueError, ArithmeticError) as e:
            reason = e.message if isinstance(e, RoundSosError) else f"{type(e).__name__}: {e}"
            logger.warning("Certificate extraction failed", label=label, error=reason)
            outcome.reason = reason
            return outcome
        cert = replace(cert, scale=scale, eps=eps)
        check = check_certificate(prog.objective, prog.constraints, cert)
        if not check.passed:
            logger.warning(
                "Certified bound is looser than the solver value",
                label=label,
                claimed=float(check.claimed),
                certified=float(check.certified_bound),
            )
        lower = check.certified_bound
        outcome.certificate = cert
        outcome.check = check
    outcome.value = lower if prog.sense == Sense.MIN else -lower
    return outcome


def relaxation_order(objective: Poly, K: ConstraintSet, options: EngineOptions) -> int:
    """The requested order, raised to the minimal one the problem admits."""
    minimal = default_order(objective, K)
    return max(options.order or minimal, minimal)


@dataclass
class RangeResult:
    interval: Interval
    outcomes: list[RelaxationOutcome]
    fallbacks: list[str]
    order: Optional[int] = None


def poly_range(
    poly: Poly,
    K: ConstraintSet,
    options: EngineOptions,
    label: str = "range",
    relaxed: bool = False,
) -> RangeResult:
    """Enclose ``poly`` over ``K`` by sparse relaxations of ``min`` and ``max``.

    A side whose relaxation fails keeps the interval-arithmetic bound. The
    result is intersected with that bound, which is always sound.
    """
    n = max(K.nvars, poly.nvars)
    naive = poly.evaluate_interval(K.box) if not poly.is_constant() else Interval.point(poly.constant_term)
    if poly.is_constant():
        return RangeResult(naive, [], [])

    base = K.without_closure()
    cliques = maximal_cliques(csp_graph(poly, base.g, n), chordal=True)
    closed = K.closed_over(cliques.cliques)
    d = relaxation_order(poly, closed, options)
    outcomes: list[RelaxationOutcome] = []
    fallbacks: list[str] = []
    sides: dict[Sense, Optional[Fraction]] = {}
    for sense in (Sense.MIN, Sense.MAX):
        side = f"{label} {sense.value}"
        try:
            prog = build_sparse_relaxation(poly, closed, cliques, d, sense)
        except RoundSosError as e:
            logger.warning("Could not build relaxation", label=side, error=e.message)
            fallbacks.append(side)
            sides[sense] = None
            continue
        outcome = run_relaxation(prog, options, side, relaxed=relaxed)
        outcomes.append(outcome)
        if not outcome.ok:
            fallbacks.append(side)
        sides[sense] = outcome.value

    lo = naive.lo if sides[Sense.MIN] is None else max(naive.lo, sides[Sense.MIN])
    hi = naive.hi if sides[Sense.MAX] is None else min(naive.hi, sides[Sense.MAX])
    if lo > hi:
        # floating solver values crossed; keep the sound enclosure
        lo, hi = naive.lo, naive.hi
    logger.debug(
        "Bounded polynomial range",
        label=label,
        order=d,
        cliques=len(cliques),
        lo=float(lo),
        hi=float(hi),
        fallbacks=len(fallbacks),
    )
    return RangeResult(Interval(lo, hi), outcomes, fallbacks, order=d)


def expr_range(expr: Expr, X: ConstraintSet, options: EngineOptions, label: str = "range") -> RangeResult:
    """:func:`poly_range` for any expression, lifting it first when it is not polynomial."""
    if is_polynomial(expr):
        return poly_range(expr_to_poly(expr, X.nvars), X, options, label)
    lifted = lift(expr, X, options.maxplus_points)
    return poly_range(lifted.objective, lifted.constraints, options, label, relaxed=lifted.is_relaxed)
