"""Roundoff error bounds for programs without conditionals."""

from __future__ import annotations

from typing import Optional

import structlog

from roundsos.core.exceptions import NonDifferentiable, RoundSosError
from roundsos.engine.decompose import ErrorDecomposition, decompose
from roundsos.engine.optimize import expr_range
from roundsos.engine.options import BoundResult, EngineOptions
from roundsos.engine.sdp_poly import LinearPartResult, sdp_poly, semialgebraic_linear_part
from roundsos.interval.bounds import ia_bound
from roundsos.program.ast import IfThenElse, contains
from roundsos.program.spec import ProgramSpec
from roundsos.relax.constraints import ConstraintSet
from roundsos.rounding.model import RoundedExpr, apply_uncertainties, round_expr

logger = structlog.get_logger()


def input_set(spec: ProgramSpec) -> ConstraintSet:
    """Box and user constraints of ``spec``; closures are added per relaxation."""
    return ConstraintSet.from_box(spec.box, spec.constraints, closure=False)


def round_program(spec: ProgramSpec, options: EngineOptions) -> RoundedExpr:
    fmt = spec.format or options.fmt
    rexpr = round_expr(spec.objective, fmt, options.rounding, n=spec.n)
    return apply_uncertainties(rexpr, spec.uncertainties)


def linear_part(
    dec: ErrorDecomposition, X: ConstraintSet, options: EngineOptions, label: str = "linear"
) -> LinearPartResult:
    polys = dec.s_polys()
    if polys is not None:
        return sdp_poly(polys, X, dec.magnitudes, options, label)
    return semialgebraic_linear_part(dec.s, X, dec.magnitudes, options, label)


def bound_rounded(
    rexpr: RoundedExpr,
    X: ConstraintSet,
    options: EngineOptions,
    label: str = "error",
) -> BoundResult:
    """Enclose ``rexpr.body - rexpr.exact`` over ``X`` and the error box.

    The enclosure is ``I_l + I_h`` plus the range of the error-free part when
    the rounded and exact programs differ at zero error.
    """
    dec = decompose(rexpr, X.box)
    lin = linear_part(dec, X, options, f"{label} linear")
    result = BoundResult(
        interval=lin.interval + dec.h_bound,
        linear=lin.interval,
        remainder=dec.h_bound,
        order=lin.order,
        errors=rexpr.m,
        certificates=list(lin.certificates),
        checks=list(lin.checks),
        fallbacks=list(lin.fallbacks),
    )
    if dec.has_constant_part():
        try:
            rng = expr_range(dec.constant, X, options, f"{label} constant")
        except RoundSosError as e:
            logger.warning("Constant part bounded by intervals", label=label, error=e.message)
            result.fallbacks.append(f"{label} constant")
            constant = ia_bound(dec.constant, X.box)
        else:
            constant = rng.interval
            result.fallbacks.extend(rng.fallbacks)
            for o in rng.outcomes:
                if o.certificate is not None and o.check is not None:
                    result.certificates.append(o.certificate)
                    result.checks.append(o.check)
        result.constant = constant
        result.interval = result.interval + constant
    logger.info(
        "Bounded roundoff error",
        label=label,
        errors=rexpr.m,
        linear=float(lin.interval.hi),
        remainder=float(dec.h_bound.hi),
        bound=float(result.bound),
    )
    return result


def bound(
    spec: ProgramSpec,
    options: Optional[EngineOptions] = None,
    X: Optional[ConstraintSet] = None,
) -> BoundResult:
    """Sound enclosure of ``rounded(f) - f`` over the inputs of ``spec``.

    ``X`` overrides the input set, e.g. a sub-box or a branch region.

    Raises:
        NonDifferentiable: if the program holds a conditional.
        DivisionByZeroInterval: if a lifted denominator may vanish.
    """
    options = options or EngineOptions.from_settings()
    if contains(spec.objective, (IfThenElse,)):
        raise NonDifferentiable(
            "conditional programs are bounded per branch region",
            details={"program": spec.name},
        )
    rexpr = round_program(spec, options)
    return bound_rounded(rexpr, X if X is not None else input_set(spec), options, spec.name or "error")
