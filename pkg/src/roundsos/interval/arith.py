"""Closed intervals with exact rational endpoints."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

from roundsos.config.constants import TranscKind
from roundsos.core.exceptions import DivisionByZeroInterval, DomainViolation, EmptyBox
from roundsos.interval.transcendental import enclose_at, multiple_of_pi, pi_enclosure

Number = Union[int, Fraction]

# Endpoints whose denominators exceed this many bits are rounded outward
# onto a dyadic grid to keep Fraction arithmetic tractable.
_MAX_DENOMINATOR_BITS = 512
_GRID_BITS = 400


def _down(q: Fraction) -> Fraction:
    if q.denominator.bit_length() <= _MAX_DENOMINATOR_BITS:
        return q
    scale = 1 << _GRID_BITS
    return Fraction(math.floor(q * scale), scale)


def _up(q: Fraction) -> Fraction:
    if q.denominator.bit_length() <= _MAX_DENOMINATOR_BITS:
        return q
    scale = 1 << _GRID_BITS
    return Fraction(math.ceil(q * scale), scale)


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` with ``lo <= hi``."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", _down(Fraction(self.lo)))
        object.__setattr__(self, "hi", _up(Fraction(self.hi)))
        if self.lo > self.hi:
            raise EmptyBox(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value: Number) -> Interval:
        return cls(Fraction(value), Fraction(value))

    @classmethod
    def symmetric(cls, radius: Number) -> Interval:
        r = abs(Fraction(radius))
        return cls(-r, r)

    # Queries

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def mag(self) -> Fraction:
        """Largest absolute value in the interval."""
        return max(abs(self.lo), abs(self.hi))

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, value: Union[Number, Interval]) -> bool:
        if isinstance(value, Interval):
            return self.lo <= value.lo and value.hi <= self.hi
        return self.lo <= value <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    # Lattice operations

    def hull(self, other: Interval) -> Interval:
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other: Interval) -> Optional[Interval]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def split(self) -> tuple[Interval, Interval]:
        m = self.mid
        return Interval(self.lo, m), Interval(m, self.hi)

    # Arithmetic

    def __neg__(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    def __add__(self, other: Union[Interval, Number]) -> Interval:
        o = _coerce(other)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __sub__(self, other: Union[Interval, Number]) -> Interval:
        o = _coerce(other)
        return Interval(self.lo - o.hi, self.hi - o.lo)

    def __rsub__(self, other: Number) -> Interval:
        return _coerce(other) - self

    def __mul__(self, other: Union[Interval, Number]) -> Interval:
        o = _coerce(other)
        if self.is_point() and o.is_point():
            return Interval.point(self.lo * o.lo)
        products = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def reciprocal(self) -> Interval:
        if self.contains_zero():
            raise DivisionByZeroInterval(f"division by interval [{self.lo}, {self.hi}] containing 0")
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other: Union[Interval, Number]) -> Interval:
        return self * _coerce(other).reciprocal()

    def __rtruediv__(self, other: Number) -> Interval:
        return _coerce(other) * self.reciprocal()

    def __pow__(self, k: int) -> Interval:
        if k < 0:
            return (self**-k).reciprocal()
        if k == 0:
            return Interval.point(1)
        lo_k, hi_k = self.lo**k, self.hi**k
        if k % 2 == 1 or self.lo >= 0:
            return Interval(lo_k, hi_k)
        if self.hi <= 0:
            return Interval(hi_k, lo_k)
        return Interval(Fraction(0), max(lo_k, hi_k))

    def __str__(self) -> str:
        return f"[{float(self.lo):.6g}, {float(self.hi):.6g}]"


def _coerce(value: Union[Interval, Number]) -> Interval:
    if isinstance(value, Interval):
        return value
    return Interval.point(value)


# Elementary functions


def _monotone(name: str, iv: Interval, increasing: bool = True) -> Interval:
    lo_at_lo, hi_at_lo = enclose_at(name, iv.lo)
    lo_at_hi, hi_at_hi = enclose_at(name, iv.hi)
    if increasing:
        return Interval(lo_at_lo, hi_at_hi)
    return Interval(lo_at_hi, hi_at_lo)


def _may_hit(iv: Interval, offset: Fraction, period: int) -> bool:
    """Whether some point ``(offset + period*k) * pi`` may lie in ``iv``."""
    pi_lo, _ = pi_enclosure()
    k_lo = math.floor((iv.lo / pi_lo - offset) / period) - 1
    k_hi = math.ceil((iv.hi / pi_lo - offset) / period) + 1
    for k in range(k_lo, k_hi + 1):
        t_lo, t_hi = multiple_of_pi(offset + period * k)
        if t_hi >= iv.lo and t_lo <= iv.hi:
            return True
    return False


def _trig(name: str, iv: Interval) -> Interval:
    _, pi_hi = pi_enclosure()
    if iv.width >= 2 * pi_hi:
        return Interval(Fraction(-1), Fraction(1))
    a_lo, a_hi = enclose_at(name, iv.lo)
    b_lo, b_hi = enclose_at(name, iv.hi)
    lo, hi = min(a_lo, b_lo), max(a_hi, b_hi)
    # sin peaks at pi/2 and bottoms at -pi/2; cos at 0 and pi
    max_at, min_at = (Fraction(1, 2), Fraction(-1, 2)) if name == "sin" else (Fraction(0), Fraction(1))
    if _may_hit(iv, max_at, 2):
        hi = Fraction(1)
    if _may_hit(iv, min_at, 2):
        lo = Fraction(-1)
    return Interval(max(lo, Fraction(-1)), min(hi, Fraction(1)))


def sqrt(iv: Interval) -> Interval:
    if iv.lo < 0:
        raise DomainViolation(f"sqrt of [{iv.lo}, {iv.hi}]", op="sqrt")
    return _monotone("sqrt", iv)


def exp(iv: Interval) -> Interval:
    return _monotone("exp", iv)


def log(iv: Interval) -> Interval:
    if iv.lo <= 0:
        raise DomainViolation(f"log of [{iv.lo}, {iv.hi}]", op="log")
    return _monotone("log", iv)


def sin(iv: Interval) -> Interval:
    return _trig("sin", iv)


def cos(iv: Interval) -> Interval:
    return _trig("cos", iv)


def tan(iv: Interval) -> Interval:
    if _may_hit(iv, Fraction(1, 2), 1):
        raise DomainViolation(f"tan pole inside [{iv.lo}, {iv.hi}]", op="tan")
    return _monotone("tan", iv)


def atan(iv: Interval) -> Interval:
    return _monotone("atan", iv)


def asin(iv: Interval) -> Interval:
    if iv.lo < -1 or iv.hi > 1:
        raise DomainViolation(f"asin of [{iv.lo}, {iv.hi}]", op="asin")
    return _monotone("asin", iv)


def acos(iv: Interval) -> Interval:
    if iv.lo < -1 or iv.hi > 1:
        raise DomainViolation(f"acos of [{iv.lo}, {iv.hi}]", op="acos")
    return _monotone("acos", iv, increasing=False)


TRANSCENDENTAL: dict[TranscKind, Callable[[Interval], Interval]] = {
    TranscKind.EXP: exp,
    TranscKind.LOG: log,
    TranscKind.SIN: sin,
    TranscKind.COS: cos,
    TranscKind.TAN: tan,
    TranscKind.ATAN: atan,
    TranscKind.ASIN: asin,
    TranscKind.ACOS: acos,
}

_BINARY: dict[str, Callable[[Interval, Interval], Interval]] = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def interval_arith(op: str, *args: Interval) -> Interval:
    """Apply a named interval operation.

    ``pow`` takes the exponent as a point interval holding a nonnegative integer.
    """
    if op in _BINARY:
        left, right = args
        return _BINARY[op](left, right)
    if op == "neg":
        return -args[0]
    if op == "sqrt":
        return sqrt(args[0])
    if op == "pow":
        base, exponent = args
        if not exponent.is_point() or exponent.lo.denominator != 1:
            raise DomainViolation("pow needs an integer exponent", op="pow")
        return base ** int(exponent.lo)
    try:
        kind = TranscKind(op)
    except ValueError as e:
        raise DomainViolation(f"unknown interval operation {op}", op=op) from e
    return TRANSCENDENTAL[kind](args[0])
