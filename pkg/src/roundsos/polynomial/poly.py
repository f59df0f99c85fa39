"""Sparse multivariate polynomials with exact rational coefficients.

A monomial is a sorted tuple of ``(variable, exponent)`` pairs with positive
exponents; the empty tuple is the constant monomial. Polynomials map monomials
to nonzero ``Fraction`` coefficients and iterate in graded order (total degree
first, then lexicographic with ``x0`` heaviest).
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from itertools import combinations_with_replacement
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence, Union

from roundsos.interval import Interval

Monomial = tuple[tuple[int, int], ...]
Coefficient = Union[int, Fraction]

ONE: Monomial = ()


def monomial(*pairs: tuple[int, int]) -> Monomial:
    """Build a canonical monomial, merging repeated variables."""
    counts: Counter[int] = Counter()
    for var, exp in pairs:
        counts[var] += exp
    return tuple(sorted((v, e) for v, e in counts.items() if e > 0))


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    return monomial(*a, *b)


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def mono_variables(m: Monomial) -> frozenset[int]:
    return frozenset(v for v, _ in m)


def mono_dense(m: Monomial, nvars: int) -> tuple[int, ...]:
    exps = [0] * nvars
    for v, e in m:
        exps[v] = e
    return tuple(exps)


def grlex_key(m: Monomial, nvars: int) -> tuple[int, tuple[int, ...]]:
    return mono_degree(m), tuple(-e for e in mono_dense(m, nvars))


def monomial_basis(variables: Iterable[int], degree: int) -> list[Monomial]:
    """All monomials in ``variables`` of total degree at most ``degree``, graded order."""
    vs = sorted(set(variables))
    basis: list[Monomial] = []
    for t in range(degree + 1):
        for combo in combinations_with_replacement(vs, t):
            basis.append(monomial(*((v, 1) for v in combo)))
    return basis


class Poly:
    """Immutable sparse polynomial over ``Fraction``."""

    __slots__ = ("_terms", "nvars", "_hash")

    def __init__(
        self,
        terms: Optional[Mapping[Monomial, Coefficient]] = None,
        nvars: int = 0,
    ) -> None:
        clean: dict[Monomial, Fraction] = {}
        top = nvars
        for mono, coeff in (terms or {}).items():
            c = Fraction(coeff)
            if c != 0:
                clean[mono] = c
                if mono:
                    top = max(top, mono[-1][0] + 1)
        self._terms = clean
        self.nvars = top
        self._hash: Optional[int] = None

    # Constructors

    @classmethod
    def const(cls, value: Coefficient, nvars: int = 0) -> Poly:
        return cls({ONE: value}, nvars)

    @classmethod
    def var(cls, index: int, nvars: int = 0) -> Poly:
        return cls({((index, 1),): 1}, max(nvars, index + 1))

    @classmethod
    def zero(cls, nvars: int = 0) -> Poly:
        return cls({}, nvars)

    # Views

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def items_sorted(self) -> list[tuple[Monomial, Fraction]]:
        n = self.nvars
        return sorted(self._terms.items(), key=lambda item: grlex_key(item[0], n))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    @property
    def constant_term(self) -> Fraction:
        return self._terms.get(ONE, Fraction(0))

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(mono, Fraction(0))

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0 by convention."""
        return max((mono_degree(m) for m in self._terms), default=0)

    def degree_in(self, variables: Iterable[int]) -> int:
        vs = set(variables)
        return max(
            (sum(e for v, e in m if v in vs) for m in self._terms),
            default=0,
        )

    def variables(self) -> frozenset[int]:
        out: set[int] = set()
        for m in self._terms:
            out.update(v for v, _ in m)
        return frozenset(out)

    def support(self) -> set[tuple[int, ...]]:
        return {mono_dense(m, self.nvars) for m in self._terms}

    def with_nvars(self, nvars: int) -> Poly:
        return Poly(self._terms, max(nvars, self.nvars))

    # Arithmetic

    def __add__(self, other: Union[Poly, Coefficient]) -> Poly:
        o = _coerce(other, self.nvars)
        out = dict(self._terms)
        for m, c in o._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Poly(out, max(self.nvars, o.nvars))

    __radd__ = __add__

    def __neg__(self) -> Poly:
        return Poly({m: -c for m, c in self._terms.items()}, self.nvars)

    def __sub__(self, other: Union[Poly, Coefficient]) -> Poly:
        return self + (-_coerce(other, self.nvars))

    def __rsub__(self, other: Coefficient) -> Poly:
        return _coerce(other, self.nvars) - self

    def __mul__(self, other: Union[Poly, Coefficient]) -> Poly:
        if not isinstance(other, Poly):
            return self.scale(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Poly(out, max(self.nvars, other.nvars))

    def __rmul__(self, other: Coefficient) -> Poly:
        return self.scale(other)

    def scale(self, factor: Coefficient) -> Poly:
        f = Fraction(factor)
        return Poly({m: c * f for m, c in self._terms.items()}, self.nvars)

    def __pow__(self, k: int) -> Poly:
        if k < 0:
            raise ValueError("negative polynomial power")
        result = Poly.const(1, self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # Calculus and evaluation

    def diff(self, var: int) -> Poly:
        out: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            exps = dict(m)
            e = exps.get(var, 0)
            if e == 0:
                continue
            exps[var] = e - 1
            dm = monomial(*exps.items())
            out[dm] = out.get(dm, Fraction(0)) + c * e
        return Poly(out, self.nvars)

    def evaluate(self, point: Sequence[Coefficient]) -> Fraction:
        total = Fraction(0)
        for m, c in self._terms.items():
            term = c
            for v, e in m:
                term *= Fraction(point[v]) ** e
            total += term
        return total

    def evaluate_interval(self, box: Sequence[Interval]) -> Interval:
        total = Interval.point(0)
        for m, c in self._terms.items():
            term = Interval.point(c)
            for v, e in m:
                term = term * (box[v] ** e)
            total = total + term
        return total

    def substitute(self, var: int, replacement: Poly) -> Poly:
        """Replace ``x_var`` by ``replacement``."""
        result = Poly.zero(max(self.nvars, replacement.nvars))
        powers: dict[int, Poly] = {}
        for m, c in self._terms.items():
            rest = tuple((v, e) for v, e in m if v != var)
            e = dict(m).get(var, 0)
            if e not in powers:
                powers[e] = replacement**e
            result = result + Poly({rest: c}, self.nvars) * powers[e]
        return result

    def flip_sign(self, var: int) -> Poly:
        """Return ``p`` with ``x_var`` replaced by ``-x_var``."""
        return Poly(
            {m: (-c if dict(m).get(var, 0) % 2 else c) for m, c in self._terms.items()},
            self.nvars,
        )

    def rename(self, mapping: Mapping[int, int]) -> Poly:
        """Renumber variables; unmapped indices are kept."""
        out: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            nm = monomial(*((mapping.get(v, v), e) for v, e in m))
            out[nm] = out.get(nm, Fraction(0)) + c
        return Poly(out)

    # Protocols

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Poly({format_terms(self)})"


def _coerce(value: Union[Poly, Coefficient], nvars: int) -> Poly:
    if isinstance(value, Poly):
        return value
    return Poly.const(value, nvars)


def format_terms(p: Poly, names: Optional[Sequence[str]] = None) -> str:
    """Human-readable form such as ``-1 + 3/4*x0^2*x2``."""
    if p.is_zero():
        return "0"
    parts = []
    for m, c in p.items_sorted():
        factors = [str(c)]
        for v, e in m:
            name = names[v] if names is not None and v < len(names) else f"x{v}"
            factors.append(name if e == 1 else f"{name}^{e}")
        parts.append("*".join(factors))
    return " + ".join(parts)


# Operation-style entry points


def poly_arith(op: str, *args: Union[Poly, Coefficient]) -> Poly:
    """Dispatch ``add sub mul neg scale pow`` on polynomials."""
    if op == "add":
        return _coerce(args[0], 0) + args[1]
    if op == "sub":
        return _coerce(args[0], 0) - args[1]
    if op == "mul":
        return _coerce(args[0], 0) * args[1]
    if op == "neg":
        return -_coerce(args[0], 0)
    if op == "scale":
        return _coerce(args[0], 0).scale(args[1])  # type: ignore[arg-type]
    if op == "pow":
        return _coerce(args[0], 0) ** int(args[1])  # type: ignore[arg-type]
    raise ValueError(f"unknown polynomial operation {op}")


def differentiate(p: Poly, var: int) -> Poly:
    return p.diff(var)


def evaluate(
    p: Poly, point: Sequence[Union[Coefficient, Interval]]
) -> Union[Fraction, Interval]:
    """Exact value at a rational point, or an enclosure over an interval box."""
    if point and all(isinstance(x, Interval) for x in point):
        return p.evaluate_interval(point)  # type: ignore[arg-type]
    return p.evaluate(point)  # type: ignore[arg-type]


def support_and_degree(p: Poly) -> tuple[set[tuple[int, ...]], int, list[frozenset[int]]]:
    """Support as dense exponent tuples, total degree, and per-monomial variable sets."""
    occurrences = [mono_variables(m) for m, _ in p.items_sorted()]
    return p.support(), p.degree(), occurrences


def parse_terms(text: str) -> Poly:
    """Inverse of :func:`format_terms` for the default ``x<i>`` names."""
    text = text.strip()
    if text == "0":
        return Poly.zero()
    terms: dict[Monomial, Fraction] = {}
    for chunk in text.split(" + "):
        factors = chunk.strip().split("*")
        coeff = Fraction(factors[0])
        pairs = []
        for factor in factors[1:]:
            name, _, exp = factor.partition("^")
            if not name.startswith("x") or not name[1:].isdigit():
                raise ValueError(f"bad variable {name!r}")
            pairs.append((int(name[1:]), int(exp) if exp else 1))
        m = monomial(*pairs)
        terms[m] = terms.get(m, Fraction(0)) + coeff
    return Poly(terms)
