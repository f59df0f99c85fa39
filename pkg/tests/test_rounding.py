"""Tests for the rounding model, error merging and uncertainties."""

import itertools
import random
from dataclasses import replace
from fractions import Fraction

import pytest

from roundsos.config.constants import TranscKind
from roundsos.core.exceptions import ConfigurationError, EpsTooLargeForChain
from roundsos.program.ast import Const, Mul, Var, free_variables
from roundsos.program.evaluate import evaluate_exact
from roundsos.program.parser import parse_program
from roundsos.rounding.format import FpFormat
from roundsos.rounding.merge import chain_bound, gamma, merge_error_products
from roundsos.rounding.model import (
    ErrorSource,
    RoundingOptions,
    apply_uncertainties,
    is_representable,
    renumber,
    round_expr,
)

NO_INPUT_ROUNDING = RoundingOptions(input_rounding=False)


def _corner_values(rexpr, point):
    """Values of the rounded body at every sign corner of the error box."""
    for signs in itertools.product((-1, 1), repeat=rexpr.m):
        env = list(point) + [s * ev.magnitude for s, ev in zip(signs, rexpr.errors)]
        yield evaluate_exact(rexpr.body, env)


class TestFpFormat:
    def test_eps(self):
        assert FpFormat(53).eps == Fraction(1, 2**53)
        assert FpFormat.parse("single").precision == 24
        assert FpFormat.parse("quad").precision == 113
        assert FpFormat.parse("80").precision == 80

    def test_transc_eps(self):
        fmt = FpFormat(53, transc_factors={TranscKind.LOG: Fraction(2)})
        assert fmt.transc_eps(TranscKind.EXP) == Fraction(3, 2) * fmt.eps
        assert fmt.transc_eps(TranscKind.LOG) == 2 * fmt.eps

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            FpFormat.parse("half")
        with pytest.raises(ConfigurationError):
            FpFormat(53, transc_factor=Fraction(1, 2))


class TestRoundExpr:
    def test_product_with_input_rounding(self, double):
        rexpr = round_expr(Mul(Var(0), Var(1)), double)
        assert rexpr.m == 3
        assert all(ev.magnitude == double.eps for ev in rexpr.errors)
        assert [ev.source for ev in rexpr.errors].count(ErrorSource.INPUT) == 2

    def test_kepler0_operation_count(self, load_bench, double):
        spec = load_bench("kepler0")
        assert round_expr(spec.objective, double, NO_INPUT_ROUNDING).m == 14
        with_neg = replace(NO_INPUT_ROUNDING, neg_error=True)
        assert round_expr(spec.objective, double, with_neg).m == 15

    def test_logexp_transcendental_factors(self, load_bench, double):
        rexpr = round_expr(load_bench("logexp").objective, double, NO_INPUT_ROUNDING)
        assert [ev.magnitude / double.eps for ev in rexpr.errors] == [Fraction(3, 2), 1, Fraction(3, 2)]

    def test_shared_subexpressions_share_errors(self, double):
        x = Var(0)
        square = Mul(x, x)
        rexpr = round_expr(square + square, double, NO_INPUT_ROUNDING)
        assert rexpr.m == 2

    def test_constants(self, double):
        assert is_representable(Fraction(3, 4), 53)
        assert not is_representable(Fraction(1, 10), 53)
        tenth = round_expr(Mul(Var(0), Const(Fraction(1, 10))), double, NO_INPUT_ROUNDING)
        assert [ev.source for ev in tenth.errors] == [ErrorSource.CONSTANT, ErrorSource.OPERATION]
        exact = RoundingOptions(input_rounding=False, round_constants=False)
        assert round_expr(Mul(Var(0), Const(Fraction(1, 10))), double, exact).m == 1

    @pytest.mark.parametrize("name", ["kepler1", "himmilbeau", "sqroot", "floudas3_3"])
    def test_zero_error_collapse(self, load_bench, double, name):
        spec = load_bench(name)
        rexpr = round_expr(spec.objective, double, n=spec.n)
        rng = random.Random(1)
        zeros = [Fraction(0)] * rexpr.m
        for _ in range(100):
            point = [iv.lo + iv.width * Fraction(rng.randint(0, 1000), 1000) for iv in spec.box]
            assert evaluate_exact(rexpr.body, point + zeros) == evaluate_exact(spec.objective, point)

    def test_machine_result_inside_error_model(self, load_bench, double):
        spec = load_bench("rigidBody1")
        rexpr = round_expr(spec.objective, double, NO_INPUT_ROUNDING, n=spec.n)
        rng = random.Random(2)
        for _ in range(50):
            point = [Fraction(rng.uniform(-15, 15)) for _ in range(3)]
            x1, x2, x3 = (float(v) for v in point)
            machine = Fraction(-x1 * x2 - 2 * x2 * x3 - x1 - x3)
            exact = evaluate_exact(spec.objective, point)
            worst = max(abs(v - exact) for v in _corner_values(rexpr, point))
            # the error model is multilinear in each e, so corners bound it
            assert abs(machine - exact) <= worst + Fraction(1, 2**1000)

    def test_renumber_keeps_post_order(self, double):
        rexpr = round_expr(Mul(Var(0), Var(1)), double)
        shuffled = renumber(rexpr)
        assert [ev.id for ev in shuffled.errors] == [2, 3, 4]


class TestMerge:
    def test_chain_bounds(self):
        eps = Fraction(1, 2**53)
        assert chain_bound([eps] * 3) == 4 * eps
        assert chain_bound([eps] * 3, "gamma") == gamma(3, eps)
        assert gamma(3, eps) < 4 * eps
        assert chain_bound([eps, 2 * eps]) == (1 + eps) * (1 + 2 * eps) - 1

    def test_chain_too_long(self):
        with pytest.raises(EpsTooLargeForChain):
            gamma(4, Fraction(1, 4))

    def test_merges_product_chain(self, double):
        x, y, z = Var(0), Var(1), Var(2)
        rexpr = round_expr(Mul(Mul(x, y), z), double, NO_INPUT_ROUNDING)
        assert rexpr.m == 2
        merged = merge_error_products(rexpr)
        assert merged.m == 1
        assert merged.errors[0].magnitude == 3 * double.eps
        assert merged.errors[0].source == ErrorSource.MERGED

    def test_single_factor_kept(self, double):
        rexpr = round_expr(Mul(Var(0), Var(1)), double, NO_INPUT_ROUNDING)
        assert merge_error_products(rexpr) == rexpr

    def test_merged_model_contains_unmerged(self, double):
        spec = parse_program("let box_m x y z = [(1, 2); (1, 2); (1, 2)];; let obj_m x y z = [(x*y*z, 0)];;")
        plain = round_expr(spec.objective, double)
        merged = round_expr(spec.objective, double, RoundingOptions(merge=True))
        assert merged.m < plain.m
        point = [Fraction(3, 2), Fraction(5, 4), Fraction(7, 4)]
        merged_values = list(_corner_values(merged, point))
        lo, hi = min(merged_values), max(merged_values)
        for value in _corner_values(plain, point):
            assert lo <= value <= hi


class TestUncertainties:
    def test_zero_uncertainty_is_identity(self, double):
        rexpr = round_expr(Var(0), double)
        assert apply_uncertainties(rexpr, [Fraction(0)]) is rexpr

    def test_single_variable(self, double):
        rexpr = round_expr(Var(0), double, NO_INPUT_ROUNDING, n=1)
        out = apply_uncertainties(rexpr, [Fraction(1, 10**4)])
        assert out.m == 1
        assert out.errors[0].magnitude == Fraction(1, 10**4)
        assert out.errors[0].source == ErrorSource.UNCERTAINTY

    def test_sum_with_one_uncertain_input(self, double):
        rexpr = round_expr(Var(0) + Var(1), double, NO_INPUT_ROUNDING, n=2)
        out = apply_uncertainties(rexpr, [Fraction(1, 10**4), Fraction(0)])
        assert sorted(ev.magnitude for ev in out.errors) == [double.eps, Fraction(1, 10**4)]
        assert free_variables(out.body) == {0, 1, 2, 3}
