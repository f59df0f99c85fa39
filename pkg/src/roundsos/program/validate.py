"""Well-formedness checks on parsed programs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import structlog

from roundsos.core.exceptions import ArityMismatch, EmptyBox, NestedConditional, UnknownVariable
from roundsos.program.ast import Div, IfThenElse, Sqrt, Transc, conditional_depth, free_variables, walk
from roundsos.program.spec import ProgramSpec
from roundsos.program.symbolic import degree

logger = structlog.get_logger()


@dataclass
class ValidationReport:
    """Summary of a validated program."""

    n: int
    k: int
    max_constraint_degree: int
    conditional_depth: int
    objective_degree: Optional[int]
    has_division: bool = False
    has_sqrt: bool = False
    has_transcendental: bool = False
    warnings: list[str] = field(default_factory=list)

    @property
    def is_polynomial(self) -> bool:
        return self.objective_degree is not None

    @property
    def is_semialgebraic(self) -> bool:
        return not self.has_transcendental and self.conditional_depth == 0


def validate_spec(spec: ProgramSpec) -> ValidationReport:
    """Check box, indices and conditional structure.

    Raises:
        EmptyBox: if some interval is inverted.
        NestedConditional: if a conditional sits inside another, or the
            program has more than one.
        UnknownVariable: if an index outside the declared inputs is free.
        ArityMismatch: if box or uncertainties disagree with the inputs.
    """
    for i, iv in enumerate(spec.box):
        if iv.lo > iv.hi:
            raise EmptyBox(f"empty interval for {spec.names[i]}", details={"index": i})
    if len(spec.box) != spec.n:
        raise ArityMismatch(f"box has {len(spec.box)} intervals for {spec.n} variables")
    if len(spec.uncertainties) != spec.n:
        raise ArityMismatch(f"{len(spec.uncertainties)} uncertainties for {spec.n} variables")
    if any(u < 0 for u in spec.uncertainties):
        raise ArityMismatch("uncertainties must be nonnegative")

    stray = {i for i in free_variables(spec.objective) if i >= spec.n}
    for g in spec.constraints:
        stray |= {i for i in g.variables() if i >= spec.n}
    if stray:
        raise UnknownVariable(f"undeclared variable indices {sorted(stray)}")

    depth = conditional_depth(spec.objective)
    count = sum(1 for node in walk(spec.objective) if isinstance(node, IfThenElse))
    if depth > 1 or count > 1:
        raise NestedConditional(
            "at most one conditional is supported",
            details={"depth": depth, "count": count},
        )

    kinds = {type(node) for node in walk(spec.objective)}
    report = ValidationReport(
        n=spec.n,
        k=spec.k,
        max_constraint_degree=max((g.degree() for g in spec.constraints), default=0),
        conditional_depth=depth,
        objective_degree=degree(spec.objective) if depth == 0 else None,
        has_division=Div in kinds,
        has_sqrt=Sqrt in kinds,
        has_transcendental=Transc in kinds,
    )
    for i, iv in enumerate(spec.box):
        if iv.is_point():
            report.warnings.append(f"{spec.names[i]} is fixed to {iv.lo}")
    logger.debug(
        "Validated program",
        name=spec.name,
        depth=depth,
        objective_degree=report.objective_degree,
    )
    return report
