"""Rational SOS certificates from floating-point Gram matrices."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import structlog

from roundsos.certify.certificate import CertConstraint, SosCertificate, SosMultiplier, SosTerm
from roundsos.config.settings import get_settings
from roundsos.core.exceptions import ExtractionDegenerate
from roundsos.polynomial import Monomial, Poly
from roundsos.relax.builder import SosProgram
from roundsos.sdp.problem import SdpSolution

logger = structlog.get_logger()

Matrix = list[list[Fraction]]


def rationalize(value: float, max_denominator: int) -> Fraction:
    """Closest fraction with bounded denominator (continued-fraction rounding)."""
    return Fraction(float(value)).limit_denominator(max_denominator)


def rationalize_matrix(block: np.ndarray, max_denominator: int) -> Matrix:
    """Symmetrize, then rationalize the upper triangle and mirror it."""
    sym = (block + block.T) / 2
    s = len(sym)
    out: Matrix = [[Fraction(0)] * s for _ in range(s)]
    for i in range(s):
        for j in range(i, s):
            v = rationalize(sym[i, j], max_denominator)
            out[i][j] = out[j][i] = v
    return out


def ldl_clipped(q: Matrix) -> tuple[Matrix, list[Fraction], int]:
    """Exact ``Q = L D L^T`` with unit lower ``L``; nonpositive pivots become 0.

    A clipped pivot also zeroes its column below the diagonal. Returns
    ``(L, d, clipped_count)``; when nothing is clipped the product is ``Q``.
    """
    s = len(q)
    lower: Matrix = [[Fraction(int(i == j)) for j in range(s)] for i in range(s)]
    d: list[Fraction] = [Fraction(0)] * s
    clipped = 0
    for k in range(s):
        pivot = q[k][k] - sum((lower[k][j] ** 2 * d[j] for j in range(k) if d[j]), Fraction(0))
        if pivot <= 0:
            clipped += 1
            continue
        d[k] = pivot
        for i in range(k + 1, s):
            acc = q[i][k] - sum(
                (lower[i][j] * lower[k][j] * d[j] for j in range(k) if d[j]), Fraction(0)
            )
            lower[i][k] = acc / pivot
    return lower, d, clipped


def squares_from_ldl(lower: Matrix, d: Sequence[Fraction], basis: Sequence[Monomial], nvars: int) -> list[SosTerm]:
    """``m^T L D L^T m = sum_k d_k (L[:, k] . m)^2``, skipping zero pivots."""
    terms = []
    for k, dk in enumerate(d):
        if dk == 0:
            continue
        coeffs: dict[Monomial, Fraction] = {}
        for i in range(k, len(basis)):
            c = lower[i][k]
            if c:
                coeffs[basis[i]] = coeffs.get(basis[i], Fraction(0)) + c
        terms.append(SosTerm(dk, Poly(coeffs, nvars)))
    return terms


def extract_certificate(
    sol: SdpSolution,
    prog: SosProgram,
    label: str = "lower",
    max_denominator: Optional[int] = None,
    relaxed: bool = False,
) -> SosCertificate:
    """Turn the Gram blocks of ``sol`` into a certificate for ``prog``.

    Raises:
        ExtractionDegenerate: if some block carries data but every pivot of
            every block was clipped.
    """
    if max_denominator is None:
        max_denominator = 2 ** get_settings().certificate_denominator_bits
    nvars = prog.nvars
    groups: dict[tuple[str, Poly], list[SosTerm]] = {}
    order: list[tuple[str, Poly]] = []
    total_pivots = 0
    kept = 0
    nonzero = False
    for block, x in zip(prog.blocks, sol.x):
        if block.size == 0:
            continue
        nonzero = nonzero or bool(np.any(np.abs(x) > 0))
        q = rationalize_matrix(np.asarray(x, dtype=float), max_denominator)
        lower, d, clipped = ldl_clipped(q)
        total_pivots += len(d)
        kept += len(d) - clipped
        key = (block.label.split(" @ ")[0], block.multiplier)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].extend(squares_from_ldl(lower, d, block.basis, nvars))
    if nonzero and total_pivots and not kept:
        raise ExtractionDegenerate(
            "every Gram pivot was clipped",
            details={"blocks": len(prog.blocks), "pivots": total_pivots},
        )
    mu = rationalize(prog.mu(sol), max_denominator)
    multipliers = tuple(SosMultiplier(lbl, g, tuple(groups[(lbl, g)])) for lbl, g in order)
    logger.debug(
        "Extracted SOS certificate",
        label=label,
        multipliers=len(multipliers),
        squares=sum(len(m.terms) for m in multipliers),
        clipped=total_pivots - kept,
    )
    return SosCertificate(
        label=label,
        objective=prog.objective,
        mu=mu,
        multipliers=multipliers,
        box=prog.constraints.box,
        order=prog.order,
        sense=prog.sense,
        relaxed=relaxed,
        constraints=tuple(
            CertConstraint(lbl, g) for lbl, g in zip(prog.constraints.labels, prog.constraints.g)
        ),
    )
