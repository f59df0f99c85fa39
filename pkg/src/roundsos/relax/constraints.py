"""Semialgebraic constraint sets ``{x : g_j(x) >= 0}`` with Archimedean closures."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from roundsos.interval import Interval
from roundsos.polynomial import Poly


def box_quadratic(index: int, iv: Interval, nvars: int = 0) -> Poly:
    """``(b - x)(x - a)``, nonnegative exactly on ``[a, b]``."""
    x = Poly.var(index, nvars)
    return (Poly.const(iv.hi, nvars) - x) * (x - iv.lo)


def ball_bound(box: Sequence[Interval], indices: Optional[Iterable[int]] = None) -> Fraction:
    """``ceil(sum max(a_i^2, b_i^2))`` over the selected variables."""
    chosen = range(len(box)) if indices is None else indices
    return Fraction(math.ceil(sum((box[i].mag ** 2 for i in chosen), Fraction(0))))


@dataclass(frozen=True)
class ConstraintSet:
    """Constraints ``g_j >= 0`` with a label each, the variable box and the ball constant ``M``.

    ``box`` gives an interval for every variable index the constraints use.
    """

    g: tuple[Poly, ...]
    labels: tuple[str, ...]
    box: tuple[Interval, ...]
    archimedean_M: Fraction

    @property
    def nvars(self) -> int:
        return len(self.box)

    def __len__(self) -> int:
        return len(self.g)

    @classmethod
    def from_box(
        cls,
        box: Sequence[Interval],
        extra: Sequence[Poly] = (),
        cliques: Optional[Sequence[frozenset[int]]] = None,
        closure: bool = True,
    ) -> ConstraintSet:
        """Box quadratics, then ``extra``, then the redundant ball constraints.

        Without cliques the ball is ``M - sum x_i^2``. With cliques each gets
        ``n_j * R^2 - sum_{i in C_j} x_i^2`` where ``R`` bounds every ``|x_i|``.
        """
        n = len(box)
        g = [box_quadratic(i, iv, n) for i, iv in enumerate(box) if not iv.is_point()]
        labels = [f"box x{i}" for i, iv in enumerate(box) if not iv.is_point()]
        for j, p in enumerate(extra):
            g.append(p.with_nvars(n))
            labels.append(f"cstr {j}")
        M = ball_bound(box)
        if closure:
            if cliques is None:
                g.append(Poly.const(M, n) - sum((Poly.var(i, n) ** 2 for i in range(n)), Poly.zero(n)))
                labels.append("ball")
            else:
                radius = max((iv.mag for iv in box), default=Fraction(0))
                r2 = Fraction(math.ceil(radius)) ** 2
                for j, clique in enumerate(cliques):
                    squares = sum((Poly.var(i, n) ** 2 for i in sorted(clique)), Poly.zero(n))
                    g.append(Poly.const(len(clique) * r2, n) - squares)
                    labels.append(f"ball {j}")
        return cls(tuple(g), tuple(labels), tuple(box), M)

    def without_closure(self) -> ConstraintSet:
        keep = [i for i, label in enumerate(self.labels) if not label.startswith("ball")]
        return replace(
            self,
            g=tuple(self.g[i] for i in keep),
            labels=tuple(self.labels[i] for i in keep),
        )

    def closed_over(self, cliques: Sequence[frozenset[int]]) -> ConstraintSet:
        """Replace the ball closures by one ``ceil(sum_{C_j} mag^2) - sum_{C_j} x_i^2`` per clique."""
        base = self.without_closure()
        n = self.nvars
        g = list(base.g)
        labels = list(base.labels)
        for j, clique in enumerate(cliques):
            squares = sum((Poly.var(i, n) ** 2 for i in sorted(clique)), Poly.zero(n))
            g.append(Poly.const(ball_bound(self.box, clique), n) - squares)
            labels.append(f"ball {j}")
        return replace(base, g=tuple(g), labels=tuple(labels))

    def with_constraints(self, extra: Sequence[Poly], label: str = "extra") -> ConstraintSet:
        return replace(
            self,
            g=self.g + tuple(extra),
            labels=self.labels + tuple(f"{label} {j}" for j in range(len(extra))),
        )

    def with_box(self, box: Sequence[Interval]) -> ConstraintSet:
        """Same non-box constraints over a new box."""
        user = [g for g, label in zip(self.g, self.labels) if label.startswith("cstr")]
        others = [
            (g, label)
            for g, label in zip(self.g, self.labels)
            if not (label.startswith("box") or label.startswith("ball") or label.startswith("cstr"))
        ]
        fresh = ConstraintSet.from_box(box, user, closure=any(lb.startswith("ball") for lb in self.labels))
        return replace(
            fresh,
            g=fresh.g + tuple(g for g, _ in others),
            labels=fresh.labels + tuple(label for _, label in others),
        )

    def lifted_to_errors(self, m: int) -> ConstraintSet:
        """``X x [-1, 1]^m`` with ``M + 1 - sum x_i^2 - e_j^2`` for each scaled error ``e_j``."""
        base = self.without_closure()
        n = self.nvars
        total = n + m
        g = [p.with_nvars(total) for p in base.g]
        labels = list(base.labels)
        unit = Interval(Fraction(-1), Fraction(1))
        squares = sum((Poly.var(i, total) ** 2 for i in range(n)), Poly.zero(total))
        for j in range(m):
            e = n + j
            g.append(box_quadratic(e, unit, total))
            labels.append(f"box e{j}")
            g.append(Poly.const(self.archimedean_M + 1, total) - squares - Poly.var(e, total) ** 2)
            labels.append(f"ball e{j}")
        return ConstraintSet(tuple(g), tuple(labels), self.box + (unit,) * m, self.archimedean_M)

    def contains(self, point: Sequence[Fraction]) -> bool:
        return all(iv.contains(v) for iv, v in zip(self.box, point)) and all(
            p.evaluate(point) >= 0 for p in self.g
        )
