"""SOS certificates and their text form.

A certificate states ``objective - mu = sum_j sigma_j * g_j + residual`` with each
``sigma_j = sum_i w_i q_i^2`` and ``w_i >= 0``. Files are line based::

    certificate <label>
    benchmark <id>
    order <d>
    eps <p/q>
    sense min|max
    scale <p/q>
    relaxed yes|no
    box <n>
    <lo> <hi>                  (n lines)
    constraint <label> | <poly>  (any number)
    objective <poly>
    mu <p/q>
    multiplier <label>
    g <poly>
    term <w> <poly>            (any number)
    end multiplier
    end certificate

Polynomials use the ``-1 + 3/4*x0^2*x1`` form; a bundle is several
certificates one after another.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from roundsos.config.constants import Sense
from roundsos.core.exceptions import ParseError
from roundsos.interval import Interval
from roundsos.polynomial import Poly, format_terms, parse_terms


@dataclass(frozen=True)
class SosTerm:
    weight: Fraction
    square: Poly


@dataclass(frozen=True)
class CertConstraint:
    """A generator ``g >= 0`` of the set the certificate is valid on."""

    label: str
    g: Poly


@dataclass(frozen=True)
class SosMultiplier:
    """``sigma * g`` with ``sigma`` given as weighted squares; ``g = 1`` for ``sigma_0``."""

    label: str
    multiplier: Poly
    terms: tuple[SosTerm, ...] = ()

    def sigma(self) -> Poly:
        total = Poly.zero()
        for t in self.terms:
            total = total + (t.square * t.square).scale(t.weight)
        return total

    def polynomial(self) -> Poly:
        return self.sigma() * self.multiplier


@dataclass(frozen=True)
class SosCertificate:
    """Lower bound ``mu`` on ``objective`` over ``box`` intersected with ``constraints``.

    ``sense`` and ``scale`` say how to read the bound back: a ``max`` certificate
    minimizes the negated function and ``scale`` undoes error-variable scaling.
    """

    label: str
    objective: Poly
    mu: Fraction
    multipliers: tuple[SosMultiplier, ...]
    box: tuple[Interval, ...]
    order: int = 1
    benchmark: str = ""
    eps: Fraction = Fraction(0)
    sense: Sense = Sense.MIN
    scale: Fraction = Fraction(1)
    relaxed: bool = False
    constraints: tuple[CertConstraint, ...] = ()

    def constraint_label(self, g: Poly) -> Optional[str]:
        return next((c.label for c in self.constraints if c.g == g), None)

    def sos_part(self) -> Poly:
        total = Poly.zero()
        for mult in self.multipliers:
            total = total + mult.polynomial()
        return total

    def residual(self) -> Poly:
        """``objective - mu - sum_j sigma_j g_j`` computed exactly."""
        return self.objective - self.mu - self.sos_part()

    def in_sense(self, lower: Fraction) -> Fraction:
        """Turn a lower bound on ``objective`` into the bound the certificate is about."""
        value = lower if self.sense == Sense.MIN else -lower
        return self.scale * value


@dataclass
class CertificateBundle:
    certificates: list[SosCertificate] = field(default_factory=list)

    def __iter__(self) -> Iterator[SosCertificate]:
        return iter(self.certificates)

    def __len__(self) -> int:
        return len(self.certificates)

    def add(self, cert: SosCertificate) -> None:
        self.certificates.append(cert)


# Text form


def _rational(value: Fraction) -> str:
    return str(value)


def format_certificate(cert: SosCertificate) -> str:
    lines = [
        f"certificate {cert.label}",
        f"benchmark {cert.benchmark}",
        f"order {cert.order}",
        f"eps {_rational(cert.eps)}",
        f"sense {cert.sense.value}",
        f"scale {_rational(cert.scale)}",
        f"relaxed {'yes' if cert.relaxed else 'no'}",
        f"box {len(cert.box)}",
    ]
    lines.extend(f"{_rational(iv.lo)} {_rational(iv.hi)}" for iv in cert.box)
    lines.extend(f"constraint {c.label} | {format_terms(c.g)}" for c in cert.constraints)
    lines.append(f"objective {format_terms(cert.objective)}")
    lines.append(f"mu {_rational(cert.mu)}")
    for mult in cert.multipliers:
        lines.append(f"multiplier {mult.label}")
        lines.append(f"g {format_terms(mult.multiplier)}")
        lines.extend(f"term {_rational(t.weight)} {format_terms(t.square)}" for t in mult.terms)
        lines.append("end multiplier")
    lines.append("end certificate")
    return "\n".join(lines) + "\n"


def format_bundle(certs: Sequence[SosCertificate]) -> str:
    return "".join(format_certificate(c) for c in certs)


class _Reader:
    def __init__(self, text: str) -> None:
        self.lines = text.splitlines()
        self.pos = 0

    def at_end(self) -> bool:
        while self.pos < len(self.lines) and not self.lines[self.pos].strip():
            self.pos += 1
        return self.pos >= len(self.lines)

    def peek(self) -> str:
        if self.at_end():
            raise ParseError("certificate text ends early", line=self.pos + 1)
        return self.lines[self.pos]

    def take(self, keyword: str) -> str:
        line = self.peek()
        head, _, rest = line.partition(" ")
        if head != keyword:
            raise ParseError(f"expected '{keyword}', found {line!r}", line=self.pos + 1)
        self.pos += 1
        return rest

    def rational(self, text: str) -> Fraction:
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(f"bad rational {text!r}", line=self.pos) from e

    def poly(self, text: str) -> Poly:
        try:
            return parse_terms(text)
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(f"bad polynomial {text!r}", line=self.pos) from e


def _read_one(reader: _Reader) -> SosCertificate:
    label = reader.take("certificate")
    benchmark = reader.take("benchmark")
    try:
        order = int(reader.take("order"))
    except ValueError as e:
        raise ParseError("bad order", line=reader.pos) from e
    eps = reader.rational(reader.take("eps"))
    sense_text = reader.take("sense").strip()
    try:
        sense = Sense(sense_text)
    except ValueError as e:
        raise ParseError(f"bad sense {sense_text!r}", line=reader.pos) from e
    scale = reader.rational(reader.take("scale"))
    relaxed = reader.take("relaxed").strip() == "yes"
    try:
        nbox = int(reader.take("box"))
    except ValueError as e:
        raise ParseError("bad box size", line=reader.pos) from e
    box = []
    for _ in range(nbox):
        parts = reader.peek().split()
        if len(parts) != 2:
            raise ParseError("box line needs two bounds", line=reader.pos + 1)
        reader.pos += 1
        box.append(Interval(reader.rational(parts[0]), reader.rational(parts[1])))
    constraints = []
    while reader.peek().startswith("constraint "):
        clabel, sep, ctext = reader.take("constraint").partition(" | ")
        if not sep:
            raise ParseError("constraint line needs '<label> | <poly>'", line=reader.pos)
        constraints.append(CertConstraint(clabel.strip(), reader.poly(ctext)))
    objective = reader.poly(reader.take("objective"))
    mu = reader.rational(reader.take("mu"))
    multipliers = []
    while reader.peek().startswith("multiplier "):
        mlabel = reader.take("multiplier")
        g = reader.poly(reader.take("g"))
        terms = []
        while reader.peek().startswith("term "):
            weight_text, _, square_text = reader.take("term").partition(" ")
            terms.append(SosTerm(reader.rational(weight_text), reader.poly(square_text)))
        if reader.take("end").strip() != "multiplier":
            raise ParseError("expected 'end multiplier'", line=reader.pos)
        multipliers.append(SosMultiplier(mlabel, g, tuple(terms)))
    if reader.take("end").strip() != "certificate":
        raise ParseError("expected 'end certificate'", line=reader.pos)
    return SosCertificate(
        label=label,
        objective=objective,
        mu=mu,
        multipliers=tuple(multipliers),
        box=tuple(box),
        order=order,
        benchmark=benchmark,
        eps=eps,
        sense=sense,
        scale=scale,
        relaxed=relaxed,
        constraints=tuple(constraints),
    )


def parse_certificate(text: str) -> SosCertificate:
    """Read exactly one certificate.

    Raises:
        ParseError: on malformed text or trailing content.
    """
    reader = _Reader(text)
    cert = _read_one(reader)
    if not reader.at_end():
        raise ParseError("unexpected text after certificate", line=reader.pos + 1)
    return cert


def parse_bundle(text: str) -> CertificateBundle:
    reader = _Reader(text)
    bundle = CertificateBundle()
    while not reader.at_end():
        bundle.add(_read_one(reader))
    return bundle
