"""Tests for the bound engine: decomposition, linear part, lifting, branches and subdivision."""

import math
from dataclasses import replace
from fractions import Fraction

import pytest

from roundsos.config.constants import SolveStatus, TranscKind
from roundsos.core.exceptions import BudgetExhausted, DivisionByZeroInterval, DomainViolation, NonDifferentiable
from roundsos.engine.analyze import analyze
from roundsos.engine.bound import bound, input_set, round_program
from roundsos.engine.branches import REGIONS, analyze_branches, bound_nlprog, branch_regions
from roundsos.engine.decompose import decompose
from roundsos.engine.lift import lift
from roundsos.engine.maxplus import default_points, transc_approx
from roundsos.engine.options import EngineOptions
from roundsos.engine.optimize import poly_range
from roundsos.engine.sdp_poly import linear_order, sdp_poly
from roundsos.engine.subdivide import split_dimension, subdivide_and_bound
from roundsos.interval import Interval
from roundsos.polynomial import Poly
from roundsos.program.ast import Const, Div, Sqrt, Var
from roundsos.program.parser import parse_program
from roundsos.program.symbolic import expr_to_poly
from roundsos.relax.constraints import ConstraintSet
from roundsos.rounding.format import FpFormat
from roundsos.rounding.model import RoundingOptions
from roundsos.sdp.problem import SdpSolution

EPS = Fraction(1, 2**53)
REFERENCE_FUNCTIONS = {
    TranscKind.EXP: math.exp,
    TranscKind.LOG: math.log,
    TranscKind.SIN: math.sin,
    TranscKind.ATAN: math.atan,
}


def _unit_set(lo: int = 0, hi: int = 1) -> ConstraintSet:
    return ConstraintSet.from_box([Interval(Fraction(lo), Fraction(hi))], closure=False)


def _failing_solver(problem, params=None):
    return SdpSolution.failed(problem, SolveStatus.NUMERICAL_TROUBLE, "forced failure")


def _overflowing_solver(problem, params=None):
    raise ValueError("array must not contain infs or NaNs")


ILL_SCALED = """
let box_scaled x y = [(0.001, 1000); (1, 2)];;
let obj_scaled x y = [(y / x + x * x * y, 0)];;
"""


class TestDecompose:
    def test_kepler0_first_coefficient(self, load_bench):
        spec = load_bench("kepler0")
        options = EngineOptions(rounding=RoundingOptions(input_rounding=False))
        rexpr = round_program(spec, options)
        dec = decompose(rexpr, spec.box)
        assert dec.m == 14
        assert expr_to_poly(dec.s[0], 6) == Poly.var(1, 6) * Poly.var(4, 6)
        assert not dec.has_constant_part()
        assert dec.s_polys() is not None
        assert dec.h_bound.mag < Fraction(1, 10**20)

    def test_rational_program_has_lifted_coefficients(self, load_bench):
        spec = load_bench("turbine1")
        dec = decompose(round_program(spec, EngineOptions()), spec.box)
        assert dec.s_polys() is None


class TestLinearPart:
    def test_single_term(self):
        x = Poly.var(0, 1)
        result = sdp_poly([x], _unit_set(-1, 1), [EPS], EngineOptions())
        assert result.interval.lo == -result.interval.hi
        assert float(result.interval.hi / EPS) == pytest.approx(1, abs=1e-6)

    def test_zero_linear_part(self):
        result = sdp_poly([Poly.zero(1)], _unit_set(), [EPS], EngineOptions())
        assert result.interval == Interval.point(0)
        assert result.chunks == 0

    def test_chunks_sum_separate_maxima(self):
        x = Poly.var(0, 1)
        coeffs = [x, 1 - x]
        whole = sdp_poly(coeffs, _unit_set(), [EPS, EPS], EngineOptions())
        split = sdp_poly(coeffs, _unit_set(), [EPS, EPS], EngineOptions(max_errors_per_relaxation=1))
        assert split.chunks == 2
        assert float(split.interval.hi / EPS) == pytest.approx(2, abs=1e-6)
        # max over x in [0, 1] of x + (1 - x) is 1, so both are sound
        assert 1 - 1e-6 <= float(whole.interval.hi / EPS) <= float(split.interval.hi / EPS) + 1e-6

    def test_failed_solve_falls_back_to_intervals(self):
        x = Poly.var(0, 1)
        result = sdp_poly([2 * x], _unit_set(), [EPS], EngineOptions(solver=_failing_solver))
        assert result.fallbacks == ["linear 0 upper"]
        assert result.interval == Interval.symmetric(2 * EPS)

    def test_solver_exception_falls_back_to_intervals(self):
        x = Poly.var(0, 1)
        result = sdp_poly([2 * x], _unit_set(), [EPS], EngineOptions(solver=_overflowing_solver))
        assert result.fallbacks == ["linear 0 upper"]
        assert result.interval == Interval.symmetric(2 * EPS)

    def test_certified_sides(self):
        x = Poly.var(0, 1)
        result = sdp_poly([x], _unit_set(1, 2), [EPS], EngineOptions(certify=True))
        assert len(result.certificates) == 2
        assert all(c.passed for c in result.checks)
        assert result.interval.hi >= 2 * EPS

    def test_linear_order(self):
        x = Poly.var(0, 1)
        assert linear_order([x]) == 1
        assert linear_order([x**2]) == 2
        assert linear_order([x], requested=3) == 3


class TestMaxplus:
    @pytest.mark.parametrize(
        "kind,lo,hi,samples",
        [
            (TranscKind.EXP, -1, 1, 10_001),
            (TranscKind.LOG, 1, 10, 2_001),
            (TranscKind.SIN, 0, 3, 2_001),
            (TranscKind.ATAN, -2, 2, 2_001),
        ],
    )
    def test_sandwich(self, kind, lo, hi, samples):
        iv = Interval(Fraction(lo), Fraction(hi))
        approx = transc_approx(kind, iv)
        fn = REFERENCE_FUNCTIONS[kind]
        slack = Fraction(1, 10**12)
        for k in range(samples):
            x = iv.lo + iv.width * Fraction(k, samples - 1)
            value = Fraction(fn(float(x)))
            assert approx.lower_value(x) <= value + slack
            assert approx.upper_value(x) >= value - slack

    def test_tight_at_sample_points(self):
        approx = transc_approx(TranscKind.EXP, Interval(Fraction(0), Fraction(1)))
        for p in approx.points:
            gap = approx.upper_value(p) - approx.lower_value(p)
            assert gap < Fraction(1, 10**20)

    def test_default_points(self):
        assert default_points(Interval(Fraction(0), Fraction(1))) == [0, Fraction(1, 2), 1]
        assert default_points(Interval(Fraction(0), Fraction(1)), 1) == [Fraction(1, 2)]

    def test_domain(self):
        with pytest.raises(DomainViolation):
            transc_approx(TranscKind.LOG, Interval(Fraction(-1), Fraction(1)))
        with pytest.raises(DomainViolation):
            transc_approx(TranscKind.EXP, Interval(Fraction(0), Fraction(1)), points=[Fraction(2)])


class TestLift:
    def test_division_graph_satisfies_constraints(self):
        lifted = lift(Div(Const(Fraction(1)), Var(0)), _unit_set(1, 2))
        assert lifted.is_relaxed
        assert lifted.constraints.nvars == 2
        for k in range(11):
            x = 1 + Fraction(k, 10)
            point = [x, 1 / x]
            assert all(g.evaluate(point) >= 0 for g in lifted.constraints.g)
            assert lifted.objective.evaluate(point) == 1 / x

    def test_sqrt_graph(self):
        lifted = lift(Sqrt(Var(0)), _unit_set(1, 4))
        assert lifted.constraints.box[1].contains(Interval(Fraction(1), Fraction(2)))
        point = [Fraction(9, 4), Fraction(3, 2)]
        assert all(g.evaluate(point) >= 0 for g in lifted.constraints.g)

    def test_polynomial_is_not_relaxed(self):
        lifted = lift(Var(0) * Var(0), _unit_set())
        assert not lifted.is_relaxed

    def test_denominator_with_zero(self):
        with pytest.raises(DivisionByZeroInterval):
            lift(Div(Const(Fraction(1)), Var(0)), _unit_set(-1, 1))

    def test_range_of_lifted_reciprocal(self):
        lifted = lift(Div(Const(Fraction(1)), Var(0)), _unit_set(1, 2))
        rng = poly_range(lifted.objective, lifted.constraints, EngineOptions(), relaxed=True)
        assert float(rng.interval.lo) == pytest.approx(0.5, abs=1e-4)
        assert float(rng.interval.hi) == pytest.approx(1.0, abs=1e-4)


class TestBound:
    def test_product(self, product_spec):
        result = bound(product_spec, EngineOptions())
        assert result.errors == 3
        # x*y*(e1 + e2 + e3) peaks at 4 * 3 eps
        assert float(result.bound / EPS) == pytest.approx(12, rel=1e-5)
        assert result.remainder.mag < EPS**2 * 100

    def test_product_certified(self, product_spec):
        result = bound(product_spec, EngineOptions(certify=True))
        assert result.checks
        assert not result.fallbacks
        assert result.bound >= 12 * EPS
        assert result.bound <= 12 * EPS * (1 + Fraction(1, 10**4))

    def test_constant_program(self, constant_spec):
        result = bound(constant_spec, EngineOptions())
        assert result.errors == 0
        assert result.bound == 0

    def test_conditional_rejected(self, load_bench):
        with pytest.raises(NonDifferentiable):
            bound(load_bench("cav10"), EngineOptions())

    def test_single_precision_is_larger(self, product_spec):
        double = bound(product_spec, EngineOptions())
        single = bound(product_spec, EngineOptions(fmt=FpFormat(24)))
        assert single.bound > double.bound * 2**28

    def test_uncertainty_adds_error(self):
        spec = parse_program(
            """
            let box_u x y = [(1, 2); (1, 2)];;
            let uncert_u x y = [0.001; 0];;
            let obj_u x y = [(x * y, 0)];;
            """
        )
        result = bound(spec, EngineOptions())
        assert result.errors == 4
        assert float(result.bound) == pytest.approx(4 * 0.001, rel=1e-3)


class TestBranches:
    def test_regions(self):
        x = Poly.var(0, 1)
        X = _unit_set(-1, 1)
        error = Interval(Fraction(-1, 10), Fraction(1, 10))
        regions = branch_regions(x, error, Interval(Fraction(-1), Fraction(1)), X)
        assert all(regions[name] is not None for name in REGIONS)
        positive = branch_regions(x, error, Interval(Fraction(1), Fraction(2)), X)
        assert [name for name in REGIONS if positive[name] is not None] == ["X3"]

    def test_cav10(self, load_bench):
        result = bound_nlprog(load_bench("cav10"), EngineOptions())
        assert set(result.branches) <= set(REGIONS)
        # crossing at x = 1 swaps x/10 for x*x + 2
        assert 2.8 < float(result.bound) < 3.5

    def test_cav10_analysis(self, load_bench):
        spec = load_bench("cav10")
        analysis = analyze_branches(spec, EngineOptions())
        assert analysis.condition_error.mag > 0
        assert analysis.condition_range.contains(0)
        assert analysis.hull().contains(analysis.results["X3"].interval)

    @pytest.mark.slow
    def test_perin(self, load_bench):
        result = bound_nlprog(load_bench("perin"), EngineOptions())
        assert result.branches
        assert result.bound > 0


class TestSubdivide:
    def test_split_dimension(self):
        box = [Interval(Fraction(1), Fraction(2)), Interval(Fraction(0), Fraction(4))]
        assert split_dimension(box) == 1
        assert split_dimension([Interval.point(1)]) is None

    def test_budget_one_is_plain_bound(self, product_spec):
        options = EngineOptions()
        assert subdivide_and_bound(product_spec, options).bound == bound(product_spec, options).bound

    def test_subdivision_never_loosens(self, product_spec):
        options = EngineOptions()
        whole = bound(product_spec, options)
        split = subdivide_and_bound(product_spec, options, budget=4)
        assert split.boxes == 4
        assert split.bound <= whole.bound

    def test_target_met_stops_early(self, product_spec):
        spec = replace(product_spec, target_bound=Fraction(1, 10**10))
        result = subdivide_and_bound(spec, EngineOptions(), budget=8)
        assert result.boxes == 1

    def test_target_unmet_strict(self, product_spec):
        spec = replace(product_spec, target_bound=Fraction(1, 10**40))
        with pytest.raises(BudgetExhausted) as exc:
            subdivide_and_bound(spec, EngineOptions(), budget=2, strict=True)
        assert exc.value.best_bound > 0

    def test_target_unmet_keeps_best_bound(self, product_spec):
        spec = replace(product_spec, target_bound=Fraction(1, 10**40))
        result = subdivide_and_bound(spec, EngineOptions(), budget=2)
        assert result.target_met is False
        assert result.boxes == 2
        assert 0 < result.bound <= bound(product_spec, EngineOptions()).bound

    def test_target_met_is_recorded(self, product_spec):
        spec = replace(product_spec, target_bound=Fraction(1, 10**10))
        assert subdivide_and_bound(spec, EngineOptions()).target_met is True
        assert subdivide_and_bound(product_spec, EngineOptions()).target_met is None


class TestAnalyze:
    def test_uses_subdivision_budget(self, product_spec):
        result = analyze(product_spec, EngineOptions(subdivide_budget=2))
        assert result.boxes == 2

    def test_unreachable_target_still_gives_bound(self, product_spec):
        spec = replace(product_spec, target_bound=Fraction(1, 10**40))
        result = analyze(spec, EngineOptions())
        assert result.target_met is False
        assert result.boxes == 1
        assert result.bound == bound(product_spec, EngineOptions()).bound

    def test_solver_exception_on_lifted_program(self):
        spec = parse_program(ILL_SCALED)
        result = analyze(spec, EngineOptions(solver=_overflowing_solver))
        assert result.fallbacks
        assert not result.certified
        assert 0 < result.bound < 1

    def test_ill_scaled_lifted_program(self):
        spec = parse_program(ILL_SCALED)
        result = analyze(spec, EngineOptions())
        # a solve that breaks down numerically ends in a fallback, never an exception
        assert 0 < float(result.bound) < 1

    def test_options_from_settings(self, fresh_settings):
        options = EngineOptions.from_settings(fresh_settings(precision="single", neg_error="true"))
        assert options.fmt.precision == 24
        assert options.rounding.neg_error
        assert options.order is None

    def test_input_set_has_no_closure(self, load_bench):
        X = input_set(load_bench("kepler0"))
        assert len(X) == 6

    @pytest.mark.slow
    def test_kepler0_single_precision(self, load_bench):
        options = EngineOptions(fmt=FpFormat(24), rounding=RoundingOptions(input_rounding=False), order=2)
        result = analyze(load_bench("kepler0"), options)
        eps = Fraction(1, 2**24)
        assert 720 <= float(result.bound / eps) <= 800
