"""Tests for the random-execution lower bound."""

import random
from fractions import Fraction

import pytest

from roundsos.cli.sampling import MpfrSemantics, random_point, sample_error
from roundsos.core.exceptions import RejectionSamplingStarved
from roundsos.engine.bound import bound
from roundsos.engine.options import EngineOptions
from roundsos.program.parser import parse_program


class TestMpfrSemantics:
    def test_rounds_to_format(self):
        sem = MpfrSemantics(24)
        tenth = sem.value(Fraction(1, 10))
        assert float(tenth) != 0.1
        assert float(tenth) == pytest.approx(0.1, rel=2**-23)

    def test_unrounded_constants_stay_exact(self):
        sem = MpfrSemantics(53, round_constants=False)
        assert sem.const(Fraction(1, 3)) * 3 == 1


class TestRandomPoint:
    def test_inside_box(self, load_bench):
        spec = load_bench("kepler0")
        rng = random.Random(3)
        for _ in range(50):
            point = random_point(spec.box, rng)
            assert all(iv.lo <= x <= iv.hi for iv, x in zip(spec.box, point))


class TestSampleError:
    def test_constant_program(self, constant_spec, double):
        result = sample_error(constant_spec, double, samples=50, seed=1)
        assert result.lower_bound == 0
        assert result.samples == 50
        assert result.reference == "exact"

    def test_same_seed_same_result(self, product_spec, double):
        first = sample_error(product_spec, double, samples=200, seed=7)
        second = sample_error(product_spec, double, samples=200, seed=7)
        assert first.lower_bound == second.lower_bound
        assert first.worst_point == second.worst_point

    def test_below_certified_bound(self, product_spec, double):
        sampled = sample_error(product_spec, double, samples=500, seed=2)
        assert 0 < sampled.lower_bound <= bound(product_spec, EngineOptions()).bound

    def test_single_precision_is_larger(self, product_spec, double, single):
        d = sample_error(product_spec, double, samples=300, seed=4).lower_bound
        s = sample_error(product_spec, single, samples=300, seed=4).lower_bound
        assert s > d

    def test_transcendental_reference(self, load_bench, double):
        result = sample_error(load_bench("logexp"), double, samples=20, seed=0)
        assert result.reference.startswith("mpfr")
        assert result.lower_bound >= 0

    def test_constraints_filter_points(self, double):
        spec = parse_program(
            """
            let box_half x = [(0, 1)];;
            let cstr_half x = [2*x - 1];;
            let obj_half x = [(x * x, 0)];;
            """
        )
        result = sample_error(spec, double, samples=100, seed=0)
        assert result.worst_point is None or result.worst_point[0] >= Fraction(1, 2)
        assert result.trials > result.samples

    def test_starved(self, double, fresh_settings):
        fresh_settings(min_acceptance_rate="0.5")
        spec = parse_program(
            """
            let box_never x = [(0, 1)];;
            let cstr_never x = [x - 10];;
            let obj_never x = [(x * x, 0)];;
            """
        )
        with pytest.raises(RejectionSamplingStarved) as exc:
            sample_error(spec, double, samples=10, seed=0)
        assert exc.value.details["accepted"] == 0
