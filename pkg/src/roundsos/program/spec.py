"""Parsed program: input box, constraints, objective."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from roundsos.interval import Interval
from roundsos.polynomial import Poly
from roundsos.program.ast import Expr
from roundsos.rounding.format import FpFormat


@dataclass(frozen=True)
class ProgramSpec:
    """A parsed program.

    Constraints are read as ``g(x) >= 0``. ``target_bound`` of 0 asks for the
    best bound. ``format`` is ``None`` when the precision comes from settings
    or the command line.
    """

    name: str
    names: tuple[str, ...]
    box: tuple[Interval, ...]
    objective: Expr
    target_bound: Fraction = Fraction(0)
    constraints: tuple[Poly, ...] = ()
    uncertainties: tuple[Fraction, ...] = ()
    format: Optional[FpFormat] = None
    let_names: Mapping[int, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not self.uncertainties:
            object.__setattr__(self, "uncertainties", tuple(Fraction(0) for _ in self.names))
        object.__setattr__(self, "target_bound", Fraction(self.target_bound))

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def k(self) -> int:
        return len(self.constraints)

    def with_box(self, box: Sequence[Interval]) -> ProgramSpec:
        return replace(self, box=tuple(box))

    def with_objective(self, objective: Expr) -> ProgramSpec:
        return replace(self, objective=objective)

    def with_constraints(self, extra: Sequence[Poly]) -> ProgramSpec:
        return replace(self, constraints=self.constraints + tuple(extra))

    def variable_name(self, index: int) -> str:
        if index < self.n:
            return self.names[index]
        return self.let_names.get(index, f"t{index}")
