"""Rational enclosures of elementary functions via MPFR directed rounding.

Every function here returns a pair ``(lo, hi)`` of exact rationals with
``lo <= f(x) <= hi``. Values come from gmpy2 evaluated once rounding down and
once rounding up at ``settings.interval_precision_bits`` bits, so the enclosure
width is a few units in the last place of that precision.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Callable

import gmpy2

from roundsos.config.constants import TranscKind
from roundsos.config.settings import settings
from roundsos.core.exceptions import DomainViolation

MpfrFn = Callable[[gmpy2.mpfr], gmpy2.mpfr]

_FUNCTIONS: dict[str, MpfrFn] = {
    "exp": gmpy2.exp,
    "log": gmpy2.log,
    "sin": gmpy2.sin,
    "cos": gmpy2.cos,
    "tan": gmpy2.tan,
    "asin": gmpy2.asin,
    "acos": gmpy2.acos,
    "atan": gmpy2.atan,
    "sqrt": gmpy2.sqrt,
}

_INCREASING = {"exp", "log", "tan", "asin", "atan", "sqrt"}
_DECREASING = {"acos"}
# sin and cos are 1-Lipschitz
_LIPSCHITZ_ONE = {"sin", "cos"}


def _context(rounding: int, precision: int | None = None) -> gmpy2.context:
    return gmpy2.context(
        precision=precision or settings.interval_precision_bits,
        round=rounding,
        trap_invalid=False,
        trap_divzero=False,
    )


def to_fraction(value: gmpy2.mpfr) -> Fraction:
    """Convert a finite MPFR value to an exact rational."""
    if not gmpy2.is_finite(value):
        raise DomainViolation(f"non-finite value {value} in enclosure", op="convert")
    num, den = value.as_integer_ratio()
    return Fraction(int(num), int(den))


def round_to_mpfr(x: Fraction, rounding: int, precision: int | None = None) -> gmpy2.mpfr:
    """Round a rational to MPFR in the given direction."""
    with _context(rounding, precision):
        return gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator))


def _apply(name: str, x: gmpy2.mpfr, rounding: int) -> Fraction:
    with _context(rounding):
        result = _FUNCTIONS[name](x)
    if gmpy2.is_nan(result):
        raise DomainViolation(f"{name} undefined at {x}", op=name)
    return to_fraction(result)


def enclose_at(name: str | TranscKind, x: Fraction) -> tuple[Fraction, Fraction]:
    """Enclose ``name(x)`` for a rational point ``x``."""
    key = name.value if isinstance(name, TranscKind) else name
    if key not in _FUNCTIONS:
        raise DomainViolation(f"unknown function {key}", op=key)

    x_down = round_to_mpfr(x, gmpy2.RoundDown)
    x_up = round_to_mpfr(x, gmpy2.RoundUp)

    if key in _INCREASING:
        return _apply(key, x_down, gmpy2.RoundDown), _apply(key, x_up, gmpy2.RoundUp)
    if key in _DECREASING:
        return _apply(key, x_up, gmpy2.RoundDown), _apply(key, x_down, gmpy2.RoundUp)

    slack = to_fraction(x_up) - to_fraction(x_down)
    lows = [_apply(key, x_down, gmpy2.RoundDown), _apply(key, x_up, gmpy2.RoundDown)]
    highs = [_apply(key, x_down, gmpy2.RoundUp), _apply(key, x_up, gmpy2.RoundUp)]
    return min(lows) - slack, max(highs) + slack


@lru_cache(maxsize=8)
def pi_enclosure(precision: int | None = None) -> tuple[Fraction, Fraction]:
    """Rational bounds ``lo < pi < hi``."""
    with _context(gmpy2.RoundDown, precision):
        lo = gmpy2.const_pi()
    with _context(gmpy2.RoundUp, precision):
        hi = gmpy2.const_pi()
    return to_fraction(lo), to_fraction(hi)


def multiple_of_pi(t: Fraction) -> tuple[Fraction, Fraction]:
    """Enclose ``t * pi`` for a rational multiplier ``t``."""
    lo, hi = pi_enclosure(settings.interval_precision_bits)
    if t >= 0:
        return t * lo, t * hi
    return t * hi, t * lo
