"""Expression AST for loop-free nonlinear programs.

Nodes are immutable and hash structurally, so identical subexpressions
compare equal and can be shared (the rounding model relies on this to give
repeated computations one error variable). Hashes are computed once at
construction, which keeps dictionary lookups on large DAGs cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Any, Callable, Iterator, Optional, Union

from roundsos.config.constants import TranscKind
from roundsos.polynomial import Poly


class Expr:
    """Base class of expression nodes."""

    _hash: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash((type(self).__name__, *self._values())))

    def _values(self) -> tuple[Any, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))  # type: ignore[arg-type]

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        assert isinstance(other, Expr)
        return self._hash == other._hash and self._values() == other._values()

    def children(self) -> tuple[Expr, ...]:
        return tuple(v for v in self._values() if isinstance(v, Expr))

    # Builder sugar (no simplification)

    def __add__(self, other: ExprLike) -> Expr:
        return Add(self, as_expr(other))

    def __radd__(self, other: ExprLike) -> Expr:
        return Add(as_expr(other), self)

    def __sub__(self, other: ExprLike) -> Expr:
        return Sub(self, as_expr(other))

    def __rsub__(self, other: ExprLike) -> Expr:
        return Sub(as_expr(other), self)

    def __mul__(self, other: ExprLike) -> Expr:
        return Mul(self, as_expr(other))

    def __rmul__(self, other: ExprLike) -> Expr:
        return Mul(as_expr(other), self)

    def __truediv__(self, other: ExprLike) -> Expr:
        return Div(self, as_expr(other))

    def __rtruediv__(self, other: ExprLike) -> Expr:
        return Div(as_expr(other), self)

    def __neg__(self) -> Expr:
        return Neg(self)


ExprLike = Union[Expr, int, Fraction]


@dataclass(frozen=True, eq=False)
class Const(Expr):
    value: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", Fraction(self.value))
        super().__post_init__()


@dataclass(frozen=True, eq=False)
class Var(Expr):
    index: int


@dataclass(frozen=True, eq=False)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=False)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=False)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=False)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=False)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=False)
class Sqrt(Expr):
    arg: Expr


@dataclass(frozen=True, eq=False)
class Transc(Expr):
    kind: TranscKind
    arg: Expr


@dataclass(frozen=True, eq=False)
class IfThenElse(Expr):
    """``if cond(x) >= 0 then then else orelse``.

    ``cond_expr`` is the condition as written (normalised to ``lhs - rhs``);
    ``cond`` is its exact polynomial.
    """

    cond: Poly
    then: Expr
    orelse: Expr
    cond_expr: Optional[Expr] = None


@dataclass(frozen=True, eq=False)
class Let(Expr):
    index: int
    binding: Expr
    body: Expr


ZERO = Const(Fraction(0))
ONE_EXPR = Const(Fraction(1))


def as_expr(value: ExprLike) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(Fraction(value))


def rebuild(node: Expr, kids: tuple[Expr, ...]) -> Expr:
    """Copy ``node`` with its expression children replaced in order."""
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, (Neg, Sqrt)):
        return type(node)(kids[0])
    if isinstance(node, Transc):
        return Transc(node.kind, kids[0])
    if isinstance(node, Let):
        return Let(node.index, kids[0], kids[1])
    if isinstance(node, IfThenElse):
        cond_expr = kids[2] if len(kids) > 2 else None
        return IfThenElse(node.cond, kids[0], kids[1], cond_expr)
    return type(node)(kids[0], kids[1])  # type: ignore[call-arg]


def walk(expr: Expr) -> Iterator[Expr]:
    """Post-order traversal visiting each distinct node once."""
    seen: set[int] = set()
    stack: list[tuple[Expr, bool]] = [(expr, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            yield node
            continue
        stack.append((node, True))
        for child in reversed(node.children()):
            if id(child) not in seen:
                stack.append((child, False))


def transform(expr: Expr, fn: Callable[[Expr, tuple[Expr, ...]], Expr]) -> Expr:
    """Bottom-up rewrite; ``fn`` receives the node and its rewritten children."""
    memo: dict[Expr, Expr] = {}
    for node in walk(expr):
        if node in memo:
            continue
        kids = tuple(memo[c] for c in node.children())
        memo[node] = fn(node, kids)
    return memo[expr]


def free_variables(expr: Expr) -> frozenset[int]:
    """Variable indices not bound by an enclosing ``Let``."""
    memo: dict[Expr, frozenset[int]] = {}
    for node in walk(expr):
        if node in memo:
            continue
        if isinstance(node, Var):
            memo[node] = frozenset({node.index})
        elif isinstance(node, Let):
            memo[node] = memo[node.binding] | (memo[node.body] - {node.index})
        elif isinstance(node, IfThenElse):
            acc = set(node.cond.variables())
            for child in node.children():
                acc |= memo[child]
            memo[node] = frozenset(acc)
        else:
            acc_vars: frozenset[int] = frozenset()
            for child in node.children():
                acc_vars |= memo[child]
            memo[node] = acc_vars
    return memo[expr]


def conditional_depth(expr: Expr) -> int:
    memo: dict[Expr, int] = {}
    for node in walk(expr):
        if node in memo:
            continue
        inner = max((memo[c] for c in node.children()), default=0)
        memo[node] = inner + 1 if isinstance(node, IfThenElse) else inner
    return memo[expr]


def node_count(expr: Expr) -> int:
    return sum(1 for _ in walk(expr))


def contains(expr: Expr, kinds: tuple[type, ...]) -> bool:
    return any(isinstance(node, kinds) for node in walk(expr))
