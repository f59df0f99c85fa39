"""JSON result models."""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Optional

from pydantic import BaseModel, Field

from roundsos import __version__
from roundsos.certify.check import CheckResult
from roundsos.config.constants import JSON_SCHEMA_VERSION, TOOL_NAME, ReferenceBounds
from roundsos.engine.options import BoundResult
from roundsos.interval import Interval


def rational_text(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


class IntervalModel(BaseModel):
    """Exact endpoints as ``p/q`` strings plus floating approximations."""

    lo: str
    hi: str
    lo_float: float
    hi_float: float

    @classmethod
    def of(cls, iv: Interval) -> IntervalModel:
        return cls(lo=rational_text(iv.lo), hi=rational_text(iv.hi), lo_float=float(iv.lo), hi_float=float(iv.hi))


class RunRecord(BaseModel):
    """Reproducibility record attached to every result."""

    tool: str = TOOL_NAME
    version: str = __version__
    schema_version: str = JSON_SCHEMA_VERSION
    solver: str
    flags: dict[str, Any] = Field(default_factory=dict)


class CheckSummary(BaseModel):
    label: str
    status: str
    certified_bound: float
    claimed: float
    assumptions: list[str] = Field(default_factory=list)

    @classmethod
    def of(cls, check: CheckResult) -> CheckSummary:
        return cls(
            label=check.label,
            status=check.status,
            certified_bound=float(check.certified_bound),
            claimed=float(check.claimed),
            assumptions=list(check.assumptions),
        )


class AnalysisResult(BaseModel):
    """Analysis of one program. ``bound`` is ``max(-lo, hi)`` of ``interval``."""

    benchmark: str
    bound: str
    bound_float: float
    interval: IntervalModel
    linear: IntervalModel
    remainder: IntervalModel
    constant: IntervalModel
    order: Optional[int] = None
    errors: int = 0
    boxes: int = 1
    wall_time: float = 0.0
    certified: bool = False
    certificate_path: Optional[str] = None
    checks: list[CheckSummary] = Field(default_factory=list)
    fallbacks: list[str] = Field(default_factory=list)
    target_met: Optional[bool] = None
    branches: Optional[dict[str, IntervalModel]] = None
    sampled_lower_bound: Optional[float] = None
    run: Optional[RunRecord] = None

    @classmethod
    def from_bound(cls, benchmark: str, result: BoundResult, wall_time: float = 0.0) -> AnalysisResult:
        return cls(
            benchmark=benchmark,
            bound=rational_text(result.bound),
            bound_float=float(result.bound),
            interval=IntervalModel.of(result.interval),
            linear=IntervalModel.of(result.linear),
            remainder=IntervalModel.of(result.remainder),
            constant=IntervalModel.of(result.constant),
            order=result.order,
            errors=result.errors,
            boxes=result.boxes,
            wall_time=round(wall_time, 3),
            certified=result.certified,
            checks=[CheckSummary.of(c) for c in result.checks],
            fallbacks=list(result.fallbacks),
            branches=(
                {name: IntervalModel.of(iv) for name, iv in result.branches.items()}
                if result.branches is not None
                else None
            ),
            target_met=result.target_met,
        )

    def render(self) -> str:
        """Human-readable summary."""
        lines = [
            f"benchmark   {self.benchmark}",
            f"bound       {self.bound_float:.6e}",
            f"interval    [{self.interval.lo_float:.6e}, {self.interval.hi_float:.6e}]",
            f"linear      [{self.linear.lo_float:.6e}, {self.linear.hi_float:.6e}]",
            f"remainder   [{self.remainder.lo_float:.6e}, {self.remainder.hi_float:.6e}]",
            f"order       {self.order if self.order is not None else '-'}",
            f"errors      {self.errors}",
            f"boxes       {self.boxes}",
            f"time        {self.wall_time:.2f}s",
            f"certified   {'yes' if self.certified else 'no'}",
        ]
        if self.target_met is not None:
            lines.append(f"target met  {'yes' if self.target_met else 'no'}")
        if self.branches:
            for name, iv in self.branches.items():
                lines.append(f"branch {name:<4} [{iv.lo_float:.6e}, {iv.hi_float:.6e}]")
        if self.sampled_lower_bound is not None:
            lines.append(f"sampled     {self.sampled_lower_bound:.6e}")
        if self.certificate_path:
            lines.append(f"certificate {self.certificate_path}")
        lines.extend(f"check       {c.label}: {c.status} ({c.certified_bound:.6e})" for c in self.checks)
        lines.extend(f"fallback    {f}" for f in self.fallbacks)
        return "\n".join(lines)


class SampleReport(BaseModel):
    benchmark: str
    lower_bound: float
    lower_bound_exact: str
    samples: int
    trials: int
    seed: int
    reference: str
    run: Optional[RunRecord] = None


class BenchRow(BaseModel):
    """One benchmark of the table; ``error`` is set instead of bounds when analysis failed."""

    benchmark: str
    row: Optional[str] = None
    bound: Optional[float] = None
    sampled: Optional[float] = None
    published: Optional[float] = None
    published_lower: Optional[float] = None
    ratio: Optional[float] = None
    sound: Optional[bool] = None
    wall_time: float = 0.0
    fallbacks: int = 0
    error: Optional[str] = None
    reference: dict[str, Optional[float]] = Field(default_factory=dict)

    def with_reference(self, ref: Optional[ReferenceBounds]) -> BenchRow:
        if ref is None:
            return self
        columns = {k: v for k, v in ref._asdict().items() if k != "row"}
        ratio = self.bound / ref.real2float if self.bound is not None and ref.real2float else None
        return self.model_copy(
            update={
                "row": ref.row,
                "published": ref.real2float,
                "published_lower": ref.lower_bound,
                "ratio": ratio,
                "reference": columns,
            }
        )


class BenchTable(BaseModel):
    rows: list[BenchRow] = Field(default_factory=list)
    run: Optional[RunRecord] = None

    @property
    def sound(self) -> bool:
        return all(r.sound is not False for r in self.rows)

    @property
    def failed(self) -> bool:
        return any(r.error is not None for r in self.rows)

    def render(self) -> str:
        """Fixed-width text table."""
        header = f"{'benchmark':<14} {'row':>5} {'bound':>10} {'sampled':>10} {'published':>10} {'ratio':>7} {'time':>7}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            if r.error is not None:
                lines.append(f"{r.benchmark:<14} {r.row or '':>5} error: {r.error}")
                continue
            lines.append(
                f"{r.benchmark:<14} {r.row or '':>5} {_num(r.bound):>10} {_num(r.sampled):>10} "
                f"{_num(r.published):>10} {_ratio(r.ratio):>7} {r.wall_time:>6.2f}s"
                + ("" if r.sound is not False else "  UNSOUND")
            )
        return "\n".join(lines)


def _num(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2e}"


def _ratio(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


class CheckReport(BaseModel):
    """Outcome of checking a certificate file, on its own or against its program."""

    path: str
    program: Optional[str] = None
    checks: list[CheckSummary] = Field(default_factory=list)
    run: Optional[RunRecord] = None

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.status in ("checked", "checked-relaxed") for c in self.checks)

    def render(self) -> str:
        lines = [f"{c.label:<32} {c.status:<16} {c.certified_bound:.6e}" for c in self.checks]
        assumed = sorted({a for c in self.checks for a in c.assumptions})
        if assumed:
            lines.append(f"assumed constraints: {', '.join(assumed)} (check with --program to bind them)")
        lines.append(f"{len(self.checks)} certificate(s), {'all passed' if self.passed else 'FAILED'}")
        return "\n".join(lines)
