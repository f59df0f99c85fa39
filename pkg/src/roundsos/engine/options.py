"""Engine options and results."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from roundsos.certify.certificate import SosCertificate
from roundsos.certify.check import CheckResult
from roundsos.config.settings import Settings, get_settings
from roundsos.interval import Interval
from roundsos.rounding.format import FpFormat
from roundsos.rounding.model import RoundingOptions
from roundsos.sdp.sdpa import Solver, make_solver
from roundsos.sdp.solver import SolverParams


@dataclass(frozen=True)
class EngineOptions:
    """Everything a bound computation depends on.

    ``order`` of None picks the minimal relaxation order for each problem.
    """

    fmt: FpFormat = field(default_factory=lambda: FpFormat(53))
    rounding: RoundingOptions = field(default_factory=RoundingOptions)
    order: Optional[int] = None
    solver: Solver = field(default_factory=lambda: make_solver("embedded"))
    params: SolverParams = field(default_factory=SolverParams)
    certify: bool = False
    max_errors_per_relaxation: int = 16
    max_moment_variables: int = 6000
    maxplus_points: int = 3
    subdivide_budget: int = 1
    accept_tol: float = 1e-6

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None, **overrides: object) -> EngineOptions:
        s = settings or get_settings()
        values: dict[str, object] = {
            "fmt": FpFormat.parse(s.precision, Fraction(s.transc_factor)),
            "rounding": RoundingOptions(
                input_rounding=s.input_rounding,
                round_constants=s.round_constants,
                neg_error=s.neg_error,
                merge=s.merge_errors,
                merge_bound=s.merge_bound,
            ),
            "order": s.relaxation_order or None,
            "solver": make_solver(s.solver_backend, s.sdpa_executable),
            "params": SolverParams.from_settings(s),
            "max_errors_per_relaxation": s.max_errors_per_relaxation,
            "max_moment_variables": s.max_moment_variables,
            "maxplus_points": s.maxplus_points,
            "subdivide_budget": s.subdivide_budget,
        }
        values.update(overrides)
        return cls(**values)  # type: ignore[arg-type]


@dataclass
class BoundResult:
    """Enclosure of the roundoff error and how it was obtained.

    ``bound = max(-lo, hi)`` of ``interval``. ``fallbacks`` lists every term
    that was bounded by interval arithmetic instead of a relaxation.
    """

    interval: Interval
    linear: Interval = field(default_factory=lambda: Interval.point(0))
    remainder: Interval = field(default_factory=lambda: Interval.point(0))
    constant: Interval = field(default_factory=lambda: Interval.point(0))
    order: Optional[int] = None
    errors: int = 0
    certificates: list[SosCertificate] = field(default_factory=list)
    checks: list[CheckResult] = field(default_factory=list)
    fallbacks: list[str] = field(default_factory=list)
    branches: Optional[dict[str, Interval]] = None
    boxes: int = 1
    target_met: Optional[bool] = None

    @property
    def bound(self) -> Fraction:
        return max(-self.interval.lo, self.interval.hi)

    @property
    def certified(self) -> bool:
        return bool(self.checks) and not self.fallbacks and all(c.trusted for c in self.checks)

    @property
    def relaxed(self) -> bool:
        return any(c.relaxed for c in self.checks)

    def absorb(self, other: BoundResult) -> None:
        """Collect certificates, checks and fallbacks of a sub-computation."""
        self.certificates.extend(other.certificates)
        self.checks.extend(other.checks)
        self.fallbacks.extend(other.fallbacks)
        if other.order is not None:
            self.order = max(self.order or 0, other.order)
