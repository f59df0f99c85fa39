"""Merging products of independent error factors into a single factor."""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction
from typing import Literal

import structlog

from roundsos.core.exceptions import EpsTooLargeForChain
from roundsos.program.ast import Expr, Mul, Var, rebuild, walk
from roundsos.rounding.model import (
    ErrorSource,
    ErrorVar,
    RoundedExpr,
    is_error_factor,
    one_plus,
    renumber,
)

logger = structlog.get_logger()


def gamma(k: int, u: Fraction) -> Fraction:
    """``k u / (1 - k u)``, the bound on ``|prod (1 + e_i) - 1|`` for ``k`` factors."""
    if k * u >= 1:
        raise EpsTooLargeForChain(
            f"chain of {k} factors needs eps < 1/{k}", chain_length=k
        )
    return k * u / (1 - k * u)


def chain_bound(magnitudes: list[Fraction], flavour: Literal["linear", "gamma"] = "linear") -> Fraction:
    """Magnitude of ``theta`` in ``prod (1 + e_i) = 1 + theta``.

    Equal magnitudes ``u`` give ``(k + 1) u`` (``linear``, valid while
    ``k (k + 1) u <= 1``, else ``gamma``) or ``gamma(k, u)``. Unequal
    magnitudes give the exact ``prod (1 + b_i) - 1``.
    """
    k = len(magnitudes)
    u = magnitudes[0]
    if any(b != u for b in magnitudes):
        product = Fraction(1)
        for b in magnitudes:
            product *= 1 + b
        return product - 1
    g = gamma(k, u)
    if flavour == "linear" and k * (k + 1) * u <= 1:
        return (k + 1) * u
    return g


def _tree_counts(root: Expr) -> dict[Expr, int]:
    """Occurrences of each node in the tree expansion of the DAG."""
    order = list(walk(root))
    counts: dict[Expr, int] = {root: 1}
    for node in reversed(order):
        c = counts.get(node, 0)
        for child in node.children():
            counts[child] = counts.get(child, 0) + c
    return counts


def merge_error_products(
    rexpr: RoundedExpr, flavour: Literal["linear", "gamma"] = "linear"
) -> RoundedExpr:
    """Replace each product of two or more fresh ``(1 + e_i)`` factors by one ``(1 + theta)``.

    A factor is fresh when its error variable occurs once in the expanded
    expression. Single factors are kept.

    Raises:
        EpsTooLargeForChain: if some chain of length ``k`` has ``k * eps >= 1``.
    """
    n = rexpr.n
    counts = _tree_counts(rexpr.body)
    by_index = {ev.id: ev for ev in rexpr.errors}
    next_index = n + rexpr.m
    created: list[ErrorVar] = []
    memo: dict[Expr, Expr] = {}

    def fresh_factor(node: Expr) -> bool:
        return is_error_factor(node, n) and counts.get(node.right, 0) == 1  # type: ignore[attr-defined]

    def flatten(node: Expr, out: list[Expr]) -> None:
        for child in node.children():
            if isinstance(child, Mul) and counts.get(child, 0) == 1:
                flatten(child, out)
            else:
                out.append(child)

    def merge(node: Expr) -> Expr:
        nonlocal next_index
        if node in memo:
            return memo[node]
        if isinstance(node, Mul):
            factors: list[Expr] = []
            flatten(node, factors)
            chain = [f for f in factors if fresh_factor(f)]
            if len(chain) >= 2:
                others = [merge(f) for f in factors if not fresh_factor(f)]
                magnitudes = [by_index[f.right.index].magnitude for f in chain]  # type: ignore[attr-defined]
                theta = ErrorVar(
                    next_index,
                    chain_bound(magnitudes, flavour),
                    ErrorSource.MERGED,
                    f"merge of {len(chain)} factors",
                )
                created.append(theta)
                next_index += 1
                acc = one_plus(theta.id)
                if others:
                    acc = others[0]
                    for f in others[1:]:
                        acc = Mul(acc, f)
                    acc = Mul(acc, one_plus(theta.id))
                memo[node] = acc
                return acc
        result = rebuild(node, tuple(merge(c) for c in node.children()))
        memo[node] = result
        return result

    body = merge(rexpr.body)
    if not created:
        return rexpr
    merged = renumber(replace(rexpr, body=body), created)
    logger.debug("Merged error products", before=rexpr.m, after=merged.m)
    return merged
