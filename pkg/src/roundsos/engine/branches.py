"""Roundoff error bounds for programs with one conditional.

For ``if p(x) >= 0 then g(x) else h(x)`` with rounded counterparts ``p_hat``,
``g_hat`` and ``h_hat``, the rounded program may take the other branch only
where the condition's own error ``p_hat - p`` in ``[p_lo, p_hi]`` can flip its
sign. Four regions cover every case:

    X1   0 <= p <= -p_lo     h_hat - g    (real takes then, float takes else)
    X2   -p_hi <= p <= 0     g_hat - h    (real takes else, float takes then)
    X3   p >= 0              g_hat - g
    X4   p <= 0              h_hat - h

The final enclosure is the hull of the four.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import structlog

from roundsos.core.exceptions import NestedConditional, NonDifferentiable
from roundsos.engine.bound import bound, bound_rounded, input_set, round_program
from roundsos.engine.options import BoundResult, EngineOptions
from roundsos.interval import Interval
from roundsos.interval.bounds import ia_bound
from roundsos.polynomial import Poly
from roundsos.program.ast import Expr, IfThenElse, walk
from roundsos.program.evaluate import condition_expr
from roundsos.program.spec import ProgramSpec
from roundsos.program.symbolic import hoist_conditional
from roundsos.relax.constraints import ConstraintSet
from roundsos.rounding.model import RoundedExpr, renumber

logger = structlog.get_logger()

REGIONS = ("X1", "X2", "X3", "X4")


@dataclass
class BranchAnalysis:
    """Condition, its error enclosure and the per-region results (None when a region is empty)."""

    condition: Poly
    condition_error: Interval
    condition_range: Interval
    regions: dict[str, Optional[ConstraintSet]] = field(default_factory=dict)
    results: dict[str, BoundResult] = field(default_factory=dict)

    @property
    def intervals(self) -> dict[str, Interval]:
        return {name: r.interval for name, r in self.results.items()}

    def hull(self) -> Interval:
        values = list(self.intervals.values())
        out = values[0]
        for iv in values[1:]:
            out = out.hull(iv)
        return out


def _pair(rexpr: RoundedExpr, rounded: Expr, exact: Expr) -> RoundedExpr:
    return renumber(replace(rexpr, body=rounded, exact=exact))


def branch_regions(
    p: Poly, p_error: Interval, p_range: Interval, X: ConstraintSet
) -> dict[str, Optional[ConstraintSet]]:
    """The four regions as constraint sets; regions that cannot hold a point are None."""
    n = X.nvars
    p = p.with_nvars(n)
    flip_up = -p_error.lo  # real p below this may round negative
    flip_down = -p_error.hi  # real p above this may round nonnegative
    regions: dict[str, Optional[ConstraintSet]] = {}
    regions["X1"] = (
        None
        if p_range.lo > flip_up or p_range.hi < 0
        else X.with_constraints([p, Poly.const(flip_up, n) - p], label="region X1")
    )
    regions["X2"] = (
        None
        if p_range.hi < flip_down or p_range.lo > 0
        else X.with_constraints([-p, p - Poly.const(flip_down, n)], label="region X2")
    )
    regions["X3"] = None if p_range.hi < 0 else X.with_constraints([p], label="region X3")
    regions["X4"] = None if p_range.lo > 0 else X.with_constraints([-p], label="region X4")
    return regions


def analyze_branches(
    spec: ProgramSpec, options: EngineOptions, X: Optional[ConstraintSet] = None
) -> BranchAnalysis:
    """Bound every region of the conditional of ``spec``.

    Raises:
        NestedConditional: if the program holds more than one conditional.
    """
    conds = [node for node in walk(spec.objective) if isinstance(node, IfThenElse)]
    if len(conds) > 1:
        raise NestedConditional("at most one conditional is supported", details={"count": len(conds)})
    X = X if X is not None else input_set(spec)
    hoisted = spec.with_objective(hoist_conditional(spec.objective))
    rexpr = round_program(hoisted, options)
    body, exact = rexpr.body, rexpr.exact
    if not (isinstance(body, IfThenElse) and isinstance(exact, IfThenElse)):
        raise NonDifferentiable("program has no conditional to split on", details={"program": spec.name})

    p_exact = condition_expr(exact)
    p_error = bound_rounded(_pair(rexpr, condition_expr(body), p_exact), X, options, "condition")
    p_range = ia_bound(p_exact, X.box)
    analysis = BranchAnalysis(exact.cond, p_error.interval, p_range)
    analysis.regions = branch_regions(exact.cond, p_error.interval, p_range, X)

    pairs = {
        "X1": (body.orelse, exact.then),
        "X2": (body.then, exact.orelse),
        "X3": (body.then, exact.then),
        "X4": (body.orelse, exact.orelse),
    }
    for name in REGIONS:
        region = analysis.regions[name]
        if region is None:
            logger.debug("Skipped empty branch region", region=name)
            continue
        rounded, real = pairs[name]
        analysis.results[name] = bound_rounded(_pair(rexpr, rounded, real), region, options, f"region {name}")
    logger.info(
        "Bounded conditional program",
        program=spec.name,
        condition_error=float(p_error.interval.mag),
        regions=sorted(analysis.results),
    )
    return analysis


def bound_nlprog(
    spec: ProgramSpec,
    options: Optional[EngineOptions] = None,
    X: Optional[ConstraintSet] = None,
) -> BoundResult:
    """Roundoff enclosure of a program that may hold one conditional.

    Programs without a conditional go straight to :func:`bound`.
    """
    options = options or EngineOptions.from_settings()
    if not any(isinstance(n, IfThenElse) for n in walk(spec.objective)):
        return bound(spec, options, X)
    analysis = analyze_branches(spec, options, X)
    result = BoundResult(interval=analysis.hull(), branches=analysis.intervals)
    for name in REGIONS:
        if name in analysis.results:
            sub = analysis.results[name]
            result.absorb(sub)
            result.errors = max(result.errors, sub.errors)
    return result
