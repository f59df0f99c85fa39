"""Dense and sparse SOS relaxations in the standard SDP form.

For ``min p`` over ``K = {g_j >= 0}`` the order-``d`` relaxation is

    maximize mu  s.t.  p - mu = sum_c m_c^T X_c m_c + sum_j g_j * m_j^T X_j m_j

with one Gram block per clique and per constraint multiplier. Matching the
coefficient of every nonconstant monomial gives the equality constraints; the
constant monomial gives ``mu = p_0 - <A_0, X>``, so the SDP cost is ``C = -A_0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import structlog

from roundsos.config.constants import Sense
from roundsos.core.exceptions import CliqueCoverageFailure, OrderTooSmall
from roundsos.polynomial import ONE, Monomial, Poly, monomial_basis
from roundsos.polynomial.poly import grlex_key, mono_mul, mono_variables
from roundsos.relax.constraints import ConstraintSet
from roundsos.sdp.problem import Entry, SdpProblem, SdpSolution
from roundsos.sparsity.graph import CliqueSet, linear_part_cliques

logger = structlog.get_logger()


@dataclass(frozen=True)
class GramBlock:
    """One PSD block: ``multiplier * m^T X m`` over ``basis``."""

    label: str
    clique: frozenset[int]
    basis: tuple[Monomial, ...]
    multiplier: Poly
    constraint: Optional[int] = None  # index into the constraint set; None for sigma_0

    @property
    def size(self) -> int:
        return len(self.basis)


@dataclass
class SosProgram:
    """An SOS relaxation together with what is needed to read back ``mu`` and certificates.

    ``objective`` is the polynomial being minimized; maximization problems
    store the negated objective and report ``-mu``.
    """

    objective: Poly
    constraints: ConstraintSet
    cliques: tuple[frozenset[int], ...]
    blocks: tuple[GramBlock, ...]
    equations: dict[Monomial, int]
    order: int
    sdp: SdpProblem
    sense: Sense = Sense.MIN

    @property
    def nvars(self) -> int:
        return self.constraints.nvars

    @property
    def moment_variables(self) -> int:
        return moment_variable_count([len(c) for c in self.cliques], self.order)

    def mu(self, solution: SdpSolution) -> float:
        """Lower bound on ``objective`` read from a primal solution."""
        return float(self.objective.constant_term) + solution.primal_objective

    def bound(self, solution: SdpSolution) -> float:
        """The relaxation's bound in the caller's sense."""
        mu = self.mu(solution)
        return mu if self.sense == Sense.MIN else -mu


def moment_variable_count(clique_sizes: Sequence[int], d: int) -> int:
    """``sum_j binom(n_j + 2d, 2d)``; a dense problem is one clique of size ``n``."""
    return sum(math.comb(nj + 2 * d, 2 * d) for nj in clique_sizes)


def _half_degree(p: Poly) -> int:
    return (max(p.degree(), 0) + 1) // 2


def default_order(objective: Poly, constraints: ConstraintSet | Sequence[Poly]) -> int:
    """``max(ceil(deg p / 2), max_j ceil(deg g_j / 2))``, at least 1."""
    gs = constraints.g if isinstance(constraints, ConstraintSet) else constraints
    return max([1, _half_degree(objective), *(_half_degree(g) for g in gs)])


def _check_order(objective: Poly, constraints: ConstraintSet, d: int) -> None:
    if objective.degree() > 2 * d:
        raise OrderTooSmall(
            f"order {d} cannot represent an objective of degree {objective.degree()}",
            details={"order": d, "degree": objective.degree()},
        )
    for label, g in zip(constraints.labels, constraints.g):
        if g.degree() > 2 * d:
            raise OrderTooSmall(
                f"order {d} cannot represent constraint '{label}' of degree {g.degree()}",
                details={"order": d, "constraint": label, "degree": g.degree()},
            )


def _check_coverage(objective: Poly, constraints: ConstraintSet, cliques: Sequence[frozenset[int]]) -> None:
    for mono in objective.terms:
        vs = mono_variables(mono)
        if not any(vs <= c for c in cliques):
            raise CliqueCoverageFailure(
                "objective monomial not covered by any clique",
                details={"monomial": [list(p) for p in mono]},
            )
    for label, g in zip(constraints.labels, constraints.g):
        if not any(g.variables() <= c for c in cliques):
            raise CliqueCoverageFailure(
                f"constraint '{label}' not covered by any clique",
                details={"constraint": label, "variables": sorted(g.variables())},
            )


def _blocks(
    constraints: ConstraintSet,
    cliques: Sequence[frozenset[int]],
    d: int,
    assign_all: bool,
) -> list[GramBlock]:
    nvars = constraints.nvars
    one = Poly.const(1, nvars)
    blocks = [
        GramBlock(f"sigma0 clique {k}", clique, tuple(monomial_basis(clique, d)), one)
        for k, clique in enumerate(cliques)
    ]
    for j, (label, g) in enumerate(zip(constraints.labels, constraints.g)):
        degree = d - _half_degree(g)
        homes = [k for k, c in enumerate(cliques) if g.variables() <= c]
        if not assign_all:
            homes = homes[:1]
        for k in homes:
            basis = tuple(monomial_basis(cliques[k], degree))
            blocks.append(GramBlock(f"{label} @ clique {k}", cliques[k], basis, g, j))
    return blocks


def _assemble(
    objective: Poly,
    constraints: ConstraintSet,
    cliques: Sequence[frozenset[int]],
    d: int,
    sense: Sense,
    assign_all: bool = False,
) -> SosProgram:
    target = objective if sense == Sense.MIN else -objective
    _check_order(target, constraints, d)
    _check_coverage(target, constraints, cliques)
    blocks = _blocks(constraints, cliques, d, assign_all)

    # Coefficient of each monomial per (block, row, col)
    rows: dict[Monomial, dict[tuple[int, int, int], Fraction]] = {}
    for b, block in enumerate(blocks):
        terms = list(block.multiplier.terms.items())
        for p, left in enumerate(block.basis):
            for q in range(p, block.size):
                pq = mono_mul(left, block.basis[q])
                for gamma, coeff in terms:
                    alpha = mono_mul(pq, gamma)
                    slot = rows.setdefault(alpha, {})
                    key = (b, p, q)
                    slot[key] = slot.get(key, Fraction(0)) + coeff
    for mono in target.terms:
        rows.setdefault(mono, {})

    nvars = max(constraints.nvars, target.nvars)
    ordered = sorted((m for m in rows if m != ONE), key=lambda m: grlex_key(m, nvars))
    equations = {m: k for k, m in enumerate(ordered)}

    def entries(alpha: Monomial, sign: int = 1) -> tuple[Entry, ...]:
        return tuple(
            (b, p, q, sign * v) for (b, p, q), v in sorted(rows.get(alpha, {}).items()) if v != 0
        )

    sdp = SdpProblem(
        block_sizes=tuple(block.size for block in blocks),
        c=entries(ONE, -1),
        a=tuple(entries(m) for m in ordered),
        b=tuple(target.coefficient(m) for m in ordered),
    )
    program = SosProgram(
        objective=target,
        constraints=constraints,
        cliques=tuple(cliques),
        blocks=tuple(blocks),
        equations=equations,
        order=d,
        sdp=sdp,
        sense=sense,
    )
    logger.debug(
        "Built SOS relaxation",
        order=d,
        cliques=len(cliques),
        blocks=len(blocks),
        equations=sdp.m,
        largest_block=max((b.size for b in blocks), default=0),
    )
    return program


def build_dense_relaxation(
    obj: Poly, K: ConstraintSet, d: int, sense: Sense = Sense.MIN
) -> SosProgram:
    """Order-``d`` relaxation with a single clique holding every variable.

    Raises:
        OrderTooSmall: if ``2d`` is below the degree of ``obj`` or some ``g_j``.
    """
    everything = frozenset(range(max(K.nvars, obj.nvars)))
    return _assemble(obj, K, [everything], d, sense)


def build_sparse_relaxation(
    obj: Poly, K: ConstraintSet, cliques: CliqueSet, d: int, sense: Sense = Sense.MIN
) -> SosProgram:
    """Order-``d`` relaxation with ``sigma_0`` split over ``cliques``.

    Each constraint multiplier lives on the first clique containing the
    constraint's variables.

    Raises:
        OrderTooSmall: if ``2d`` is below the degree of ``obj`` or some ``g_j``.
        CliqueCoverageFailure: if a monomial or constraint fits in no clique.
    """
    return _assemble(obj, K, list(cliques.cliques), d, sense)


def build_linear_part_relaxation(
    l_coeffs: Sequence[Poly],
    X: ConstraintSet,
    d: Optional[int] = None,
    sense: Sense = Sense.MAX,
) -> SosProgram:
    """Relaxation of ``opt sum_j s_j(x) e_j`` over ``X x [-1, 1]^m``.

    The error variables are already scaled to ``[-1, 1]``; the caller multiplies
    the returned bound back by the error magnitudes folded into ``s_j``.
    Cliques are ``{x, e_j}``; constraints on ``x`` alone get a multiplier in
    every clique.
    """
    n = X.nvars
    m = len(l_coeffs)
    total = n + m
    objective = Poly.zero(total)
    for j, s in enumerate(l_coeffs):
        objective = objective + s.with_nvars(total) * Poly.var(n + j, total)
    K = X.lifted_to_errors(m)
    if d is None:
        d = default_order(objective, K)
    cliques = linear_part_cliques(n, m)
    return _assemble(objective, K, list(cliques.cliques), d, sense, assign_all=True)
