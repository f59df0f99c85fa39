"""Tests for constraint sets and the dense and sparse SOS relaxations."""

import random
from fractions import Fraction

import pytest

from roundsos.config.constants import Sense
from roundsos.core.exceptions import CliqueCoverageFailure, OrderTooSmall
from roundsos.interval import Interval
from roundsos.polynomial import Poly
from roundsos.program.symbolic import expr_to_poly
from roundsos.relax.builder import (
    build_dense_relaxation,
    build_linear_part_relaxation,
    build_sparse_relaxation,
    default_order,
    moment_variable_count,
)
from roundsos.relax.constraints import ConstraintSet, ball_bound, box_quadratic
from roundsos.sdp.solver import solve
from roundsos.sparsity.graph import CliqueSet

KEPLER0_CLIQUES = CliqueSet.of([{0, 3}, {0, 1, 2}, {0, 1, 4}, {0, 4, 5}, {0, 2, 5}])


@pytest.fixture
def kepler0(load_bench):
    """Objective polynomial and box of kepler0."""
    spec = load_bench("kepler0")
    return expr_to_poly(spec.objective, spec.n), spec.box


class TestConstraintSet:
    def test_box_quadratic_sign(self):
        g = box_quadratic(0, Interval(Fraction(-1), Fraction(2)), 1)
        assert g.evaluate([Fraction(0)]) == 2
        assert g.evaluate([Fraction(3)]) < 0

    def test_kepler0_ball(self, kepler0):
        _, box = kepler0
        K = ConstraintSet.from_box(box)
        assert K.archimedean_M == 243
        assert len(K) == 7
        assert K.labels[-1] == "ball"
        assert K.g[-1] == 243 - sum((Poly.var(i, 6) ** 2 for i in range(6)), Poly.zero(6))

    def test_point_intervals_have_no_box_constraint(self):
        box = [Interval.point(1), Interval(Fraction(0), Fraction(1))]
        K = ConstraintSet.from_box(box, closure=False)
        assert K.labels == ("box x1",)

    def test_closed_over_cliques(self, kepler0):
        _, box = kepler0
        K = ConstraintSet.from_box(box).closed_over(list(KEPLER0_CLIQUES))
        balls = [g for g, label in zip(K.g, K.labels) if label.startswith("ball")]
        assert len(balls) == 5
        assert balls[0].constant_term == ball_bound(box, {0, 3}) == 81

    def test_lifted_to_errors(self):
        K = ConstraintSet.from_box([Interval(Fraction(0), Fraction(2))])
        lifted = K.lifted_to_errors(2)
        assert lifted.nvars == 3
        assert "box e1" in lifted.labels
        assert "ball" not in lifted.labels
        e_ball = lifted.g[lifted.labels.index("ball e0")]
        assert e_ball.evaluate([Fraction(0), Fraction(1), Fraction(0)]) == K.archimedean_M

    def test_with_box_keeps_user_constraints(self):
        x = Poly.var(0, 1)
        K = ConstraintSet.from_box([Interval(Fraction(0), Fraction(4))], [x - 1])
        half = K.with_box([Interval(Fraction(0), Fraction(2))])
        assert half.archimedean_M == 4
        assert (x - 1) in half.g


class TestSizes:
    @pytest.mark.parametrize("d,count", [(1, 28), (2, 210), (3, 924)])
    def test_dense_counts(self, kepler0, d, count):
        f, box = kepler0
        program = build_dense_relaxation(f, ConstraintSet.from_box(box), d)
        assert program.moment_variables == count

    @pytest.mark.parametrize("d,count", [(2, 155), (3, 364)])
    def test_sparse_counts(self, kepler0, d, count):
        f, box = kepler0
        K = ConstraintSet.from_box(box).closed_over(list(KEPLER0_CLIQUES))
        program = build_sparse_relaxation(f, K, KEPLER0_CLIQUES, d)
        assert program.moment_variables == count
        assert moment_variable_count(KEPLER0_CLIQUES.sizes, d) == count

    def test_single_clique_matches_dense(self, kepler0):
        f, box = kepler0
        K = ConstraintSet.from_box(box)
        dense = build_dense_relaxation(f, K, 1)
        sparse = build_sparse_relaxation(f, K, CliqueSet.of([range(6)]), 1)
        assert dense.sdp == sparse.sdp

    def test_block_sizes(self, kepler0):
        f, box = kepler0
        program = build_dense_relaxation(f, ConstraintSet.from_box(box), 2)
        # sigma_0 on degree-2 monomials, quadratic constraints on degree-1
        assert program.sdp.block_sizes == (28,) + (7,) * 7


class TestOrder:
    def test_default_order(self, kepler0):
        f, box = kepler0
        assert default_order(f, ConstraintSet.from_box(box)) == 1
        x = Poly.var(0, 1)
        assert default_order(x**5, [x]) == 3

    def test_order_too_small(self, kepler0):
        f, box = kepler0
        with pytest.raises(OrderTooSmall):
            build_dense_relaxation(f * f, ConstraintSet.from_box(box), 1)

    def test_uncovered_constraint(self, kepler0):
        f, box = kepler0
        with pytest.raises(CliqueCoverageFailure):
            build_sparse_relaxation(f, ConstraintSet.from_box(box), KEPLER0_CLIQUES, 2)


class TestSolvedRelaxations:
    def test_univariate_minimum(self):
        # (x - 1)^2 + 2 on [-3, 3]
        x = Poly.var(0, 1)
        K = ConstraintSet.from_box([Interval(Fraction(-3), Fraction(3))])
        program = build_dense_relaxation((x - 1) ** 2 + 2, K, 1)
        assert program.mu(solve(program.sdp)) == pytest.approx(2, abs=1e-6)

    def test_maximization(self):
        x = Poly.var(0, 1)
        K = ConstraintSet.from_box([Interval(Fraction(0), Fraction(2))])
        program = build_dense_relaxation(x * (2 - x), K, 1, sense=Sense.MAX)
        assert program.bound(solve(program.sdp)) == pytest.approx(1, abs=1e-6)

    def test_linear_part_bound(self):
        # max |x e| over x in [1, 2], |e| <= 1
        x = Poly.var(0, 1)
        X = ConstraintSet.from_box([Interval(Fraction(1), Fraction(2))])
        program = build_linear_part_relaxation([x], X, 1)
        assert program.bound(solve(program.sdp)) == pytest.approx(2, abs=1e-5)

    @pytest.mark.slow
    @pytest.mark.parametrize("d,expected", [(1, 20.755), (2, 20.8608)])
    def test_kepler0_dense(self, kepler0, d, expected):
        f, box = kepler0
        program = build_dense_relaxation(f, ConstraintSet.from_box(box), d)
        assert program.mu(solve(program.sdp)) == pytest.approx(expected, abs=0.02)


def _chain_polynomial(rng: random.Random, degree: int) -> Poly:
    """Random polynomial in x0, x1, x2 whose monomials sit in ``{0, 1}`` or ``{1, 2}``."""
    x = [Poly.var(i, 3) for i in range(3)]
    p = Poly.zero(3)
    for i, j in ((0, 1), (1, 2)):
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                term = Poly.const(Fraction(rng.randint(-5, 5), rng.randint(1, 3)), 3)
                if a:
                    term = term * x[i] ** a
                if b:
                    term = term * x[j] ** b
                p = p + term
    return p


CHAIN_BOX = [Interval(Fraction(-1), Fraction(1))] * 3
CHAIN_CLIQUES = CliqueSet.of([{0, 1}, {1, 2}])


def _sampled_minimum(f: Poly, rng: random.Random) -> Fraction:
    points = [[Fraction(rng.randint(-20, 20), 20) for _ in range(3)] for _ in range(200)]
    return min(f.evaluate(p) for p in points)


class TestRelaxationProperties:
    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_higher_order_never_loosens(self, seed):
        rng = random.Random(seed)
        f = _chain_polynomial(rng, 2)
        K = ConstraintSet.from_box(CHAIN_BOX)
        bounds = [build_dense_relaxation(f, K, d) for d in (1, 2, 3)]
        mus = [program.mu(solve(program.sdp)) for program in bounds]
        assert mus[0] <= mus[1] + 1e-5 * max(1.0, abs(mus[1]))
        assert mus[1] <= mus[2] + 1e-5 * max(1.0, abs(mus[2]))
        assert mus[2] <= float(_sampled_minimum(f, rng)) + 1e-5

    def test_higher_order_never_loosens_upper_bounds(self):
        x0, x1 = Poly.var(0, 2), Poly.var(1, 2)
        X = ConstraintSet.from_box([Interval(Fraction(1), Fraction(2))] * 2)
        bounds = []
        for d in (1, 2, 3):
            program = build_linear_part_relaxation([x0 - x1, x1], X, d)
            bounds.append(program.bound(solve(program.sdp)))
        assert bounds[1] <= bounds[0] + 1e-5
        assert bounds[2] <= bounds[1] + 1e-5
        # |x0 - x1| + |x1| <= 1 + 2
        assert bounds[2] >= 3 - 1e-5

    @pytest.mark.parametrize("seed", [4, 5, 6])
    @pytest.mark.parametrize("d", [1, 2])
    def test_dense_is_at_least_as_tight_as_sparse(self, seed, d):
        f = _chain_polynomial(random.Random(seed), 2)
        K = ConstraintSet.from_box(CHAIN_BOX).closed_over(list(CHAIN_CLIQUES))
        dense = build_dense_relaxation(f, K, d)
        sparse = build_sparse_relaxation(f, K, CHAIN_CLIQUES, d)
        assert sparse.moment_variables < dense.moment_variables
        dense_mu = dense.mu(solve(dense.sdp))
        sparse_mu = sparse.mu(solve(sparse.sdp))
        assert sparse_mu <= dense_mu + 1e-5 * max(1.0, abs(dense_mu))

    @pytest.mark.slow
    def test_kepler0_dense_is_at_least_as_tight_as_sparse(self, kepler0):
        f, box = kepler0
        K = ConstraintSet.from_box(box).closed_over(list(KEPLER0_CLIQUES))
        dense = build_dense_relaxation(f, K, 2)
        sparse = build_sparse_relaxation(f, K, KEPLER0_CLIQUES, 2)
        dense_mu = dense.mu(solve(dense.sdp))
        sparse_mu = sparse.mu(solve(sparse.sdp))
        assert sparse_mu <= dense_mu + 1e-4
