"""Expression evaluation over pluggable arithmetic."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Generic, Mapping, Protocol, Sequence, TypeVar, Union

from roundsos.config.constants import TranscKind
from roundsos.core.exceptions import NotPolynomial
from roundsos.program.ast import (
    Add,
    Const,
    Div,
    Expr,
    IfThenElse,
    Let,
    Mul,
    Neg,
    Sqrt,
    Sub,
    Transc,
    Var,
)
from roundsos.program.symbolic import poly_to_expr

T = TypeVar("T")


class Semantics(Protocol[T]):
    """Arithmetic used by :func:`evaluate`."""

    def const(self, value: Fraction) -> T: ...

    def add(self, a: T, b: T) -> T: ...

    def sub(self, a: T, b: T) -> T: ...

    def mul(self, a: T, b: T) -> T: ...

    def div(self, a: T, b: T) -> T: ...

    def neg(self, a: T) -> T: ...

    def sqrt(self, a: T) -> T: ...

    def transc(self, kind: TranscKind, a: T) -> T: ...

    def select(self, cond: T, then: Callable[[], T], orelse: Callable[[], T]) -> T: ...


class _Evaluator(Generic[T]):
    def __init__(self, env: Mapping[int, T], sem: Semantics[T]) -> None:
        self.env = dict(env)
        self.sem = sem
        self.memo: dict[Expr, T] = {}

    def __call__(self, node: Expr) -> T:
        if node in self.memo:
            return self.memo[node]
        value = self._eval(node)
        self.memo[node] = value
        return value

    def _eval(self, node: Expr) -> T:
        sem = self.sem
        if isinstance(node, Const):
            return sem.const(node.value)
        if isinstance(node, Var):
            return self.env[node.index]
        if isinstance(node, Neg):
            return sem.neg(self(node.arg))
        if isinstance(node, Add):
            return sem.add(self(node.left), self(node.right))
        if isinstance(node, Sub):
            return sem.sub(self(node.left), self(node.right))
        if isinstance(node, Mul):
            return sem.mul(self(node.left), self(node.right))
        if isinstance(node, Div):
            return sem.div(self(node.left), self(node.right))
        if isinstance(node, Sqrt):
            return sem.sqrt(self(node.arg))
        if isinstance(node, Transc):
            return sem.transc(node.kind, self(node.arg))
        if isinstance(node, Let):
            self.env[node.index] = self(node.binding)
            return self(node.body)
        if isinstance(node, IfThenElse):
            cond = self(condition_expr(node))
            return sem.select(cond, lambda: self(node.then), lambda: self(node.orelse))
        raise TypeError(f"unexpected node {type(node).__name__}")


def condition_expr(node: IfThenElse) -> Expr:
    """Expression whose sign decides the branch (``>= 0`` takes ``then``)."""
    if node.cond_expr is not None:
        return node.cond_expr
    return poly_to_expr(node.cond)


def evaluate(expr: Expr, env: Union[Mapping[int, T], Sequence[T]], sem: Semantics[T]) -> T:
    """Evaluate ``expr`` with variable values from ``env``.

    Shared subexpressions are evaluated once.
    """
    mapping = env if isinstance(env, Mapping) else dict(enumerate(env))
    return _Evaluator(mapping, sem)(expr)


class FloatSemantics:
    """Native binary64 arithmetic."""

    _FUNCS: dict[TranscKind, Callable[[float], float]] = {
        TranscKind.EXP: math.exp,
        TranscKind.LOG: math.log,
        TranscKind.SIN: math.sin,
        TranscKind.COS: math.cos,
        TranscKind.TAN: math.tan,
        TranscKind.ASIN: math.asin,
        TranscKind.ACOS: math.acos,
        TranscKind.ATAN: math.atan,
    }

    def const(self, value: Fraction) -> float:
        return float(value)

    def add(self, a: float, b: float) -> float:
        return a + b

    def sub(self, a: float, b: float) -> float:
        return a - b

    def mul(self, a: float, b: float) -> float:
        return a * b

    def div(self, a: float, b: float) -> float:
        return a / b

    def neg(self, a: float) -> float:
        return -a

    def sqrt(self, a: float) -> float:
        return math.sqrt(a)

    def transc(self, kind: TranscKind, a: float) -> float:
        return self._FUNCS[kind](a)

    def select(self, cond: float, then: Callable[[], float], orelse: Callable[[], float]) -> float:
        return then() if cond >= 0 else orelse()


class ExactSemantics:
    """Exact rational arithmetic; square roots only of perfect squares."""

    def const(self, value: Fraction) -> Fraction:
        return value

    def add(self, a: Fraction, b: Fraction) -> Fraction:
        return a + b

    def sub(self, a: Fraction, b: Fraction) -> Fraction:
        return a - b

    def mul(self, a: Fraction, b: Fraction) -> Fraction:
        return a * b

    def div(self, a: Fraction, b: Fraction) -> Fraction:
        return a / b

    def neg(self, a: Fraction) -> Fraction:
        return -a

    def sqrt(self, a: Fraction) -> Fraction:
        if a >= 0:
            num, den = math.isqrt(a.numerator), math.isqrt(a.denominator)
            if num * num == a.numerator and den * den == a.denominator:
                return Fraction(num, den)
        raise NotPolynomial(f"sqrt({a}) is irrational")

    def transc(self, kind: TranscKind, a: Fraction) -> Fraction:
        raise NotPolynomial(f"{kind.value} has no exact rational value")

    def select(
        self, cond: Fraction, then: Callable[[], Fraction], orelse: Callable[[], Fraction]
    ) -> Fraction:
        return then() if cond >= 0 else orelse()


def evaluate_exact(expr: Expr, point: Sequence[Union[int, Fraction]]) -> Fraction:
    return evaluate(expr, [Fraction(v) for v in point], ExactSemantics())


def evaluate_float(expr: Expr, point: Sequence[float]) -> float:
    return evaluate(expr, list(point), FloatSemantics())
