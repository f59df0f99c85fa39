"""Empirical lower bounds on the roundoff error by random execution.

The program runs once in the target floating-point format (MPFR at precision
``p``, round to nearest) and once in a reference arithmetic: exact rationals
when the program allows it, otherwise MPFR at the reference precision. The
largest observed difference is a lower bound on the true worst-case error.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import gmpy2
import structlog

from roundsos.config.constants import TranscKind
from roundsos.config.settings import get_settings
from roundsos.core.exceptions import DomainViolation, NotPolynomial, RejectionSamplingStarved
from roundsos.interval import Interval
from roundsos.interval.transcendental import to_fraction
from roundsos.program.ast import Expr
from roundsos.program.evaluate import ExactSemantics, evaluate
from roundsos.program.spec import ProgramSpec
from roundsos.rounding.format import FpFormat

logger = structlog.get_logger()

_MPFR: dict[TranscKind, Callable[[gmpy2.mpfr], gmpy2.mpfr]] = {
    TranscKind.EXP: gmpy2.exp,
    TranscKind.LOG: gmpy2.log,
    TranscKind.SIN: gmpy2.sin,
    TranscKind.COS: gmpy2.cos,
    TranscKind.TAN: gmpy2.tan,
    TranscKind.ASIN: gmpy2.asin,
    TranscKind.ACOS: gmpy2.acos,
    TranscKind.ATAN: gmpy2.atan,
}

POINT_BITS = 64


class MpfrSemantics:
    """Round-to-nearest arithmetic at a fixed precision.

    ``round_constants`` controls whether literals are rounded to the format.
    """

    def __init__(self, precision: int, round_constants: bool = True) -> None:
        self.ctx = gmpy2.context(precision=precision, round=gmpy2.RoundToNearest)
        self.round_constants = round_constants

    def value(self, x: Fraction) -> gmpy2.mpfr:
        with gmpy2.local_context(self.ctx):
            return gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator))

    def const(self, value: Fraction) -> gmpy2.mpfr:
        if self.round_constants:
            return self.value(value)
        return gmpy2.mpq(value.numerator, value.denominator)

    def _op(self, fn: Callable[..., gmpy2.mpfr], *args: gmpy2.mpfr) -> gmpy2.mpfr:
        with gmpy2.local_context(self.ctx):
            return fn(*args)

    def add(self, a: gmpy2.mpfr, b: gmpy2.mpfr) -> gmpy2.mpfr:
        return self._op(gmpy2.add, a, b)

    def sub(self, a: gmpy2.mpfr, b: gmpy2.mpfr) -> gmpy2.mpfr:
        return self._op(gmpy2.sub, a, b)

    def mul(self, a: gmpy2.mpfr, b: gmpy2.mpfr) -> gmpy2.mpfr:
        return self._op(gmpy2.mul, a, b)

    def div(self, a: gmpy2.mpfr, b: gmpy2.mpfr) -> gmpy2.mpfr:
        return self._op(gmpy2.div, a, b)

    def neg(self, a: gmpy2.mpfr) -> gmpy2.mpfr:
        return -a

    def sqrt(self, a: gmpy2.mpfr) -> gmpy2.mpfr:
        return self._op(gmpy2.sqrt, a)

    def transc(self, kind: TranscKind, a: gmpy2.mpfr) -> gmpy2.mpfr:
        return self._op(_MPFR[kind], a)

    def select(
        self, cond: gmpy2.mpfr, then: Callable[[], gmpy2.mpfr], orelse: Callable[[], gmpy2.mpfr]
    ) -> gmpy2.mpfr:
        return then() if cond >= 0 else orelse()


def _as_fraction(value: object) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, gmpy2.mpq):
        return Fraction(int(value.numerator), int(value.denominator))
    return to_fraction(value)  # type: ignore[arg-type]


def random_point(box: tuple[Interval, ...], rng: random.Random) -> list[Fraction]:
    """Uniform point on a ``2^-64`` grid of each interval."""
    return [iv.lo + iv.width * Fraction(rng.getrandbits(POINT_BITS), 2**POINT_BITS) for iv in box]


@dataclass
class SampleResult:
    lower_bound: Fraction
    samples: int
    trials: int
    worst_point: Optional[list[Fraction]] = None
    reference: str = "exact"

    @property
    def acceptance_rate(self) -> float:
        return self.samples / self.trials if self.trials else 0.0


class _Reference:
    """Exact evaluation, switching to high-precision MPFR once it hits an irrational value."""

    def __init__(self, precision: int) -> None:
        self.exact = True
        self.mpfr = MpfrSemantics(precision, round_constants=False)

    def __call__(self, expr: Expr, point: list[Fraction]) -> Fraction:
        if self.exact:
            try:
                return evaluate(expr, point, ExactSemantics())
            except NotPolynomial:
                self.exact = False
        env = [self.mpfr.value(x) for x in point]
        return _as_fraction(evaluate(expr, env, self.mpfr))


def sample_error(
    spec: ProgramSpec,
    fmt: FpFormat,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    input_rounding: bool = True,
    round_constants: bool = True,
) -> SampleResult:
    """Largest ``|float(f)(x) - f(x)|`` over random inputs satisfying the constraints.

    With input rounding off, each sampled point is first rounded to the
    format so that both executions see the same inputs.

    Raises:
        RejectionSamplingStarved: if the constraints accept too few points.
    """
    settings = get_settings()
    samples = settings.samples if samples is None else samples
    seed = settings.seed if seed is None else seed
    rng = random.Random(seed)
    floating = MpfrSemantics(fmt.precision, round_constants)
    reference = _Reference(settings.reference_precision_bits)
    max_trials = max(samples, math.ceil(samples / settings.min_acceptance_rate))

    best = Fraction(0)
    worst: Optional[list[Fraction]] = None
    accepted = 0
    trials = 0
    while accepted < samples and trials < max_trials:
        trials += 1
        point = random_point(spec.box, rng)
        if not input_rounding:
            point = [_as_fraction(floating.value(x)) for x in point]
        if any(g.evaluate(point) < 0 for g in spec.constraints):
            continue
        accepted += 1
        try:
            exact = reference(spec.objective, point)
            rounded = _as_fraction(evaluate(spec.objective, [floating.value(x) for x in point], floating))
        except (ArithmeticError, ValueError, DomainViolation):
            continue
        diff = abs(rounded - exact)
        if diff > best:
            best, worst = diff, point

    if samples and (trials == 0 or accepted / trials < settings.min_acceptance_rate):
        raise RejectionSamplingStarved(
            "constraints accept too few random points",
            details={"program": spec.name, "accepted": accepted, "trials": trials},
        )
    logger.info(
        "Sampled roundoff error",
        program=spec.name,
        samples=accepted,
        trials=trials,
        lower_bound=float(best),
        reference="exact" if reference.exact else "mpfr",
    )
    return SampleResult(
        lower_bound=best,
        samples=accepted,
        trials=trials,
        worst_point=worst,
        reference="exact" if reference.exact else f"mpfr{settings.reference_precision_bits}",
    )
