"""Tests for certificate extraction, exact checking and the text format."""

import random
from dataclasses import replace
from fractions import Fraction
from typing import Sequence

import numpy as np
import pytest

from roundsos.certify.certificate import (
    CertConstraint,
    CertificateBundle,
    SosCertificate,
    SosMultiplier,
    SosTerm,
    format_bundle,
    format_certificate,
    parse_bundle,
    parse_certificate,
)
from roundsos.certify.check import check_bundle, check_certificate, constraint_set
from roundsos.certify.extract import extract_certificate, ldl_clipped, rationalize, squares_from_ldl
from roundsos.config.constants import Sense, SolveStatus
from roundsos.core.exceptions import ExtractionDegenerate, MalformedCertificate, ParseError
from roundsos.engine.analyze import analyze
from roundsos.engine.options import EngineOptions
from roundsos.interval import Interval
from roundsos.polynomial import Poly, monomial
from roundsos.program.parser import parse_program
from roundsos.relax.builder import build_dense_relaxation
from roundsos.relax.constraints import ConstraintSet
from roundsos.sdp.problem import SdpSolution
from roundsos.sdp.solver import solve

x0, x1 = Poly.var(0, 2), Poly.var(1, 2)
ONE = Poly.const(1)
UNIT_BOX = (Interval(Fraction(-1), Fraction(1)),) * 2

# 1/4 + x0^4 - 2 x0^2 x1^2 + x1^4 = (1/2)^2 + (x0^2 - x1^2)^2
QUARTIC = Fraction(1, 4) + x0**4 - 2 * x0**2 * x1**2 + x1**4


def _quartic_certificate(mu: Fraction = Fraction(0), weight: Fraction = Fraction(1)) -> SosCertificate:
    terms = [SosTerm(weight, x0**2 - x1**2)]
    if mu == 0:
        terms.insert(0, SosTerm(Fraction(1, 4), ONE))
    return SosCertificate(
        label="quartic",
        objective=QUARTIC,
        mu=mu,
        multipliers=(SosMultiplier("sigma0", ONE, tuple(terms)),),
        box=UNIT_BOX,
        order=2,
        benchmark="quartic",
    )


def _random_certificate(rng: random.Random) -> SosCertificate:
    def poly() -> Poly:
        return Poly(
            {
                monomial((0, rng.randint(0, 2)), (1, rng.randint(0, 2))): Fraction(rng.randint(-9, 9), rng.randint(1, 7))
                for _ in range(3)
            }
        )

    multipliers = tuple(
        SosMultiplier(
            f"m{j}",
            ONE if j == 0 else poly(),
            tuple(SosTerm(Fraction(rng.randint(0, 5), rng.randint(1, 5)), poly()) for _ in range(rng.randint(0, 3))),
        )
        for j in range(rng.randint(1, 3))
    )
    return SosCertificate(
        label=f"random{rng.randint(0, 99)}",
        objective=poly(),
        mu=Fraction(rng.randint(-50, 50), rng.randint(1, 9)),
        multipliers=multipliers,
        box=UNIT_BOX,
        order=rng.randint(1, 3),
        eps=Fraction(1, 2**53),
        sense=rng.choice([Sense.MIN, Sense.MAX]),
        scale=Fraction(1, 2**rng.randint(0, 60)),
        relaxed=rng.random() < 0.5,
    )


class TestCheck:
    def test_exact_decomposition(self):
        result = check_certificate(QUARTIC, None, _quartic_certificate())
        assert _quartic_certificate().residual().is_zero()
        assert result.certified_bound == 0
        assert result.residual == Interval.point(0)
        assert result.status == "checked"

    def test_tight_bound(self):
        result = check_certificate(None, None, _quartic_certificate(mu=Fraction(1, 4)))
        assert result.certified_bound == Fraction(1, 4)

    def test_constant_residual(self):
        x = Poly.var(0, 1)
        eps = Fraction(1, 10**9)
        cert = SosCertificate(
            label="shifted",
            objective=x * x + eps,
            mu=Fraction(0),
            multipliers=(SosMultiplier("sigma0", ONE, (SosTerm(Fraction(1), x),)),),
            box=(Interval(Fraction(0), Fraction(1)),),
        )
        result = check_certificate(None, None, cert)
        assert result.residual == Interval.point(eps)
        assert result.certified_bound == eps

    def test_corrupted_certificate_drops(self):
        cert = _quartic_certificate(weight=Fraction(2))
        result = check_certificate(None, None, cert)
        assert result.residual.lo < 0
        assert result.certified_bound < 0
        assert not result.passed
        assert result.status == "failed"

    def test_negative_weight(self):
        with pytest.raises(MalformedCertificate):
            check_certificate(None, None, _quartic_certificate(weight=Fraction(-1)))

    def test_objective_mismatch(self):
        with pytest.raises(MalformedCertificate):
            check_certificate(QUARTIC + 1, None, _quartic_certificate())

    def test_multiplier_outside_constraint_set(self):
        K = ConstraintSet.from_box(list(UNIT_BOX), closure=False)
        cert = _quartic_certificate()
        stray = SosMultiplier("stray", x0, (SosTerm(Fraction(0), ONE),))
        with pytest.raises(MalformedCertificate):
            check_certificate(None, K, replace(cert, multipliers=cert.multipliers + (stray,)))

    def test_relaxed_status(self):
        result = check_certificate(None, None, replace(_quartic_certificate(), relaxed=True))
        assert result.status == "checked-relaxed"

    def test_bundle(self):
        results = check_bundle(parse_bundle(format_bundle([_quartic_certificate(), _quartic_certificate(mu=Fraction(1, 4))])))
        assert [r.certified_bound for r in results] == [0, Fraction(1, 4)]


def _forged_certificate(constraints: tuple[CertConstraint, ...] = ()) -> SosCertificate:
    # x - 5 = 1 * (x - 5) exactly, so only the set the multiplier lives on stops mu = 5
    x = Poly.var(0, 1)
    return SosCertificate(
        label="forged",
        objective=x,
        mu=Fraction(5),
        multipliers=(SosMultiplier("cstr 0", x - 5, (SosTerm(Fraction(1), ONE),)),),
        box=(Interval(Fraction(0), Fraction(1)),),
        benchmark="forged",
        constraints=constraints,
    )


def _extracted_certificate() -> SosCertificate:
    x = Poly.var(0, 1)
    K = ConstraintSet.from_box([Interval(Fraction(-3), Fraction(3))])
    program = build_dense_relaxation((x - 1) ** 2 + 2, K, 1)
    return replace(extract_certificate(solve(program.sdp), program), benchmark="shifted")


class TestConstraintBinding:
    def test_unlisted_multiplier_is_rejected(self):
        cert = _forged_certificate()
        assert cert.residual().is_zero()
        with pytest.raises(MalformedCertificate):
            check_certificate(None, None, cert)

    def test_declared_constraint_is_an_assumption(self):
        x = Poly.var(0, 1)
        result = check_certificate(None, None, _forged_certificate((CertConstraint("cstr 0", x - 5),)))
        assert result.passed
        assert result.assumptions == ("cstr 0",)
        assert result.status == "checked-assuming"
        assert not result.trusted

    def test_box_derived_constraints_are_trusted(self):
        cert = _extracted_certificate()
        assert [c.label for c in cert.constraints] == ["box x0", "ball"]
        result = check_certificate(None, None, cert, tolerance=Fraction(1, 10**5))
        assert result.assumptions == ()
        assert result.trusted

    def test_nonnegative_enclosure_is_not_an_assumption(self):
        x = Poly.var(0, 1)
        cert = replace(
            _forged_certificate((CertConstraint("cstr 0", x + 1),)),
            mu=Fraction(-1),
            multipliers=(SosMultiplier("cstr 0", x + 1, (SosTerm(Fraction(1), ONE),)),),
        )
        result = check_certificate(None, None, cert)
        assert result.certified_bound == -1
        assert result.trusted

    def test_explicit_set_rejects_declared_constraint(self):
        x = Poly.var(0, 1)
        K = ConstraintSet.from_box([Interval(Fraction(0), Fraction(1))])
        with pytest.raises(MalformedCertificate):
            check_certificate(x, K, _forged_certificate((CertConstraint("cstr 0", x - 5),)))

    def test_constraints_survive_text_form(self):
        cert = _extracted_certificate()
        text = format_certificate(cert)
        assert any(line.startswith("constraint box x0 | ") for line in text.splitlines())
        assert parse_certificate(text) == cert

    def test_constraint_line_needs_separator(self):
        lines = format_certificate(_extracted_certificate()).splitlines()
        broken = [line.replace(" | ", " ") if line.startswith("constraint ") else line for line in lines]
        with pytest.raises(ParseError):
            parse_certificate("\n".join(broken))

    def test_bundle_against_expected(self):
        cert = _extracted_certificate()
        results = check_bundle(CertificateBundle([cert]), Fraction(1, 10**5), expected=[cert])
        assert [r.trusted for r in results] == [True]

    def test_bundle_with_forged_constraint(self):
        x = Poly.var(0, 1)
        honest = replace(_forged_certificate(), mu=Fraction(0), multipliers=())
        forged = _forged_certificate((CertConstraint("cstr 0", x - 5),))
        with pytest.raises(MalformedCertificate):
            check_bundle(CertificateBundle([forged]), expected=[honest])

    @pytest.mark.parametrize(
        "change",
        [
            {"objective": Poly.var(0, 1) * 2},
            {"box": (Interval(Fraction(0), Fraction(2)),)},
            {"label": "other"},
            {"benchmark": "other"},
        ],
    )
    def test_bundle_for_another_program(self, change):
        honest = replace(_forged_certificate(), mu=Fraction(0), multipliers=())
        with pytest.raises(MalformedCertificate):
            check_bundle(CertificateBundle([replace(honest, **change)]), expected=[honest])


PRODUCT = """
let box_product x y = [(1, 2); (1, 2)];;
let obj_product x y = [(x * y, 0)];;
"""

TAMPER_SOURCES = [
    "product",
    "rigidBody1",
    pytest.param("doppler1", marks=pytest.mark.slow),
    pytest.param("kepler0", marks=pytest.mark.slow),
]


@pytest.fixture(scope="module")
def generated(load_bench):
    """Certificates an analysis issues and checks, by source program."""
    cache: dict[str, list[SosCertificate]] = {}

    def certificates(name: str) -> list[SosCertificate]:
        if name not in cache:
            spec = parse_program(PRODUCT) if name == "product" else load_bench(name)
            issued = analyze(spec, EngineOptions(certify=True)).certificates
            checks = check_bundle(CertificateBundle(issued), expected=issued)
            cache[name] = [c for c, r in zip(issued, checks) if r.trusted]
        return cache[name]

    return certificates


def _slack(cert: SosCertificate) -> Fraction:
    return max(Fraction(1), abs(cert.mu))


def _points(box: Sequence[Interval], count: int = 8) -> list[list[Fraction]]:
    rng = random.Random(len(box))
    points = [[iv.lo + (iv.hi - iv.lo) / 2 for iv in box]]
    for _ in range(count):
        points.append([iv.lo + (iv.hi - iv.lo) * Fraction(rng.randint(1, 99), 100) for iv in box])
    return points


def _with_term(cert: SosCertificate, i: int, k: int, term: SosTerm) -> SosCertificate:
    mult = cert.multipliers[i]
    terms = mult.terms[:k] + (term,) + mult.terms[k + 1 :]
    multipliers = cert.multipliers[:i] + (replace(mult, terms=terms),) + cert.multipliers[i + 1 :]
    return replace(cert, multipliers=multipliers)


def _objective_mutants(cert: SosCertificate) -> list[SosCertificate]:
    x0 = Poly.var(0, max(cert.objective.nvars, 1))
    return [replace(cert, objective=cert.objective + Fraction(1)), replace(cert, objective=cert.objective + x0)]


def _mu_mutants(cert: SosCertificate) -> list[SosCertificate]:
    certified = check_certificate(cert.objective, constraint_set(cert), cert).certified_bound
    return [replace(cert, mu=certified + _slack(cert) / 1000)]


def _weight_mutants(cert: SosCertificate, limit: int = 40) -> list[SosCertificate]:
    # an inflated weight pushes the residual below -2 * slack at a sample point
    points = _points(cert.box)
    residual = cert.residual()
    slots = [(i, k) for i, mult in enumerate(cert.multipliers) for k in range(len(mult.terms))]
    if len(slots) > limit:
        slots = sorted(random.Random(cert.label).sample(slots, limit))
    mutants = []
    for i, k in slots:
        mult = cert.multipliers[i]
        term = mult.terms[k]
        negated = -term.weight if term.weight else Fraction(-1)
        mutants.append(_with_term(cert, i, k, SosTerm(negated, term.square)))
        values = [term.square.evaluate(p) ** 2 * mult.multiplier.evaluate(p) for p in points]
        value = max(values)
        if value <= 0:
            continue
        at = points[values.index(value)]
        bump = 2 * (_slack(cert) + abs(residual.evaluate(at))) / value
        mutants.append(_with_term(cert, i, k, SosTerm(term.weight + bump, term.square)))
    return mutants


def _multiplier_mutants(cert: SosCertificate) -> list[SosCertificate]:
    mutants = []
    for i, mult in enumerate(cert.multipliers):
        for g in (mult.multiplier + Fraction(1), mult.multiplier.scale(2)):
            changed = cert.multipliers[:i] + (replace(mult, multiplier=g),) + cert.multipliers[i + 1 :]
            mutants.append(replace(cert, multipliers=changed))
    return mutants


def _region_mutants(cert: SosCertificate) -> list[SosCertificate]:
    i = next(j for j, iv in enumerate(cert.box) if not iv.is_point())
    iv = cert.box[i]
    box = list(cert.box)
    mutants = []
    for changed in (Interval(iv.lo, iv.hi + 1), Interval(iv.lo, (iv.lo + iv.hi) / 2)):
        box[i] = changed
        mutants.append(replace(cert, box=tuple(box)))
    flipped = Sense.MAX if cert.sense == Sense.MIN else Sense.MIN
    mutants.append(replace(cert, sense=flipped))
    mutants.append(replace(cert, scale=cert.scale * 2))
    mutants.append(replace(cert, eps=cert.eps + Fraction(1, 2**24)))
    mutants.append(replace(cert, relaxed=not cert.relaxed))
    return mutants


MUTATORS = {
    "objective": _objective_mutants,
    "mu": _mu_mutants,
    "weight": _weight_mutants,
    "multiplier": _multiplier_mutants,
    "region": _region_mutants,
}


def _rejected(mutant: SosCertificate, original: SosCertificate) -> bool:
    try:
        results = check_bundle(CertificateBundle([mutant]), expected=[original])
    except MalformedCertificate:
        return True
    return not results[0].passed


class TestTampering:
    @pytest.mark.parametrize("source", TAMPER_SOURCES)
    @pytest.mark.parametrize("component", sorted(MUTATORS))
    def test_every_mutant_is_rejected(self, generated, source, component):
        certs = generated(source)
        assert certs
        checked = 0
        for cert in certs:
            for mutant in MUTATORS[component](cert):
                assert mutant != cert
                assert _rejected(mutant, cert), f"{component} change to {cert.label} accepted"
                checked += 1
        assert checked

    @pytest.mark.parametrize("source", TAMPER_SOURCES)
    def test_untouched_certificates_pass(self, generated, source):
        for cert in generated(source):
            assert not _rejected(cert, cert)


class TestExtract:
    def test_ldl_reconstructs_psd_matrix(self):
        rng = random.Random(9)
        for _ in range(20):
            b = [[Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(3)] for _ in range(3)]
            q = [[sum(b[i][k] * b[j][k] for k in range(3)) for j in range(3)] for i in range(3)]
            lower, d, clipped = ldl_clipped(q)
            if clipped:
                continue
            rebuilt = [[sum(lower[i][k] * d[k] * lower[j][k] for k in range(3)) for j in range(3)] for i in range(3)]
            assert rebuilt == q

    def test_clipping_keeps_weights_nonnegative(self):
        q = [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(-1)]]
        _, d, clipped = ldl_clipped(q)
        assert d == [1, 0]
        assert clipped == 1

    def test_squares_from_ldl(self):
        basis = [(), ((0, 2),), ((1, 2),)]
        q = [
            [Fraction(1, 4), Fraction(0), Fraction(0)],
            [Fraction(0), Fraction(1), Fraction(-1)],
            [Fraction(0), Fraction(-1), Fraction(1)],
        ]
        lower, d, _ = ldl_clipped(q)
        terms = squares_from_ldl(lower, d, basis, 2)
        assert [t.weight for t in terms] == [Fraction(1, 4), 1]
        assert terms[1].square == x0**2 - x1**2

    def test_rationalize(self):
        assert rationalize(0.1, 1000) == Fraction(1, 10)

    def test_extract_and_check(self):
        x = Poly.var(0, 1)
        K = ConstraintSet.from_box([Interval(Fraction(-3), Fraction(3))])
        program = build_dense_relaxation((x - 1) ** 2 + 2, K, 1)
        cert = extract_certificate(solve(program.sdp), program)
        assert all(t.weight >= 0 for m in cert.multipliers for t in m.terms)
        result = check_certificate(program.objective, K, cert, tolerance=Fraction(1, 10**5))
        assert result.passed
        assert result.certified_bound <= 2
        assert float(result.certified_bound) == pytest.approx(2, abs=1e-5)

    def test_extract_unconstrained_quartic(self):
        K = ConstraintSet((), (), UNIT_BOX, Fraction(2))
        program = build_dense_relaxation(QUARTIC, K, 2)
        cert = extract_certificate(solve(program.sdp), program)
        result = check_certificate(QUARTIC, K, cert, tolerance=Fraction(1, 10**5))
        assert result.certified_bound <= Fraction(1, 4)
        assert float(result.certified_bound) == pytest.approx(0.25, abs=1e-5)

    def _fake_solution(self, program, fill):
        blocks = [fill(s) for s in program.sdp.dims]
        return SdpSolution(
            status=SolveStatus.OPTIMAL,
            x=blocks,
            y=np.zeros(program.sdp.m),
            z=[np.zeros_like(b) for b in blocks],
            primal_objective=0.0,
            dual_objective=0.0,
        )

    def test_all_pivots_clipped(self):
        x = Poly.var(0, 1)
        program = build_dense_relaxation(x * x, ConstraintSet.from_box([Interval(Fraction(0), Fraction(1))]), 1)
        with pytest.raises(ExtractionDegenerate):
            extract_certificate(self._fake_solution(program, lambda s: -np.eye(s)), program)

    def test_zero_blocks_give_empty_sos(self):
        x = Poly.var(0, 1)
        program = build_dense_relaxation(x * x, ConstraintSet.from_box([Interval(Fraction(0), Fraction(1))]), 1)
        cert = extract_certificate(self._fake_solution(program, lambda s: np.zeros((s, s))), program)
        assert all(m.sigma().is_zero() for m in cert.multipliers)


class TestTextFormat:
    def test_round_trip_is_byte_identical(self):
        text = format_certificate(_quartic_certificate())
        assert parse_certificate(text) == _quartic_certificate()
        assert format_certificate(parse_certificate(text)) == text

    def test_empty_certificate(self):
        cert = SosCertificate(label="empty", objective=Poly.zero(), mu=Fraction(0), multipliers=(), box=())
        assert parse_certificate(format_certificate(cert)) == cert

    def test_random_certificates(self):
        rng = random.Random(12)
        certs = [_random_certificate(rng) for _ in range(10)]
        assert parse_bundle(format_bundle(certs)).certificates == certs

    def test_header(self):
        lines = format_certificate(_quartic_certificate()).splitlines()
        assert lines[:4] == ["certificate quartic", "benchmark quartic", "order 2", "eps 0"]
        assert "term 1/4 1" in lines

    @pytest.mark.parametrize(
        "broken",
        [
            "",
            "certificate a\nbenchmark b\norder two\n",
            "certificate a\nbenchmark b\norder 1\neps 0\nsense up\n",
        ],
    )
    def test_parse_errors(self, broken):
        with pytest.raises(ParseError):
            parse_certificate(broken)

    def test_trailing_text(self):
        with pytest.raises(ParseError):
            parse_certificate(format_certificate(_quartic_certificate()) + "garbage\n")
