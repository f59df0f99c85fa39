"""Render a ProgramSpec back into program source."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

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
from roundsos.program.evaluate import condition_expr
from roundsos.program.spec import ProgramSpec
from roundsos.program.symbolic import poly_to_expr

_BINARY = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def format_decimal(value: Fraction) -> str:
    """Exact decimal text when the value terminates, ``(p/q)`` otherwise."""
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"({value.numerator}/{value.denominator})"
    if value.denominator == 1:
        return str(value.numerator)
    places = max(twos, fives)
    scaled = abs(value.numerator) * (10**places // value.denominator)
    digits = str(scaled).rjust(places + 1, "0")
    text = f"{digits[:-places]}.{digits[-places:]}"
    return f"-{text}" if value < 0 else text


def format_expr(expr: Expr, name_of: Callable[[int], str]) -> str:
    """Fully parenthesised source text of ``expr``."""
    if isinstance(expr, Const):
        return format_decimal(expr.value)
    if isinstance(expr, Var):
        return name_of(expr.index)
    if isinstance(expr, Neg):
        return f"(-{format_expr(expr.arg, name_of)})"
    op = _BINARY.get(type(expr))
    if op is not None:
        left = format_expr(expr.left, name_of)  # type: ignore[attr-defined]
        right = format_expr(expr.right, name_of)  # type: ignore[attr-defined]
        return f"({left} {op} {right})"
    if isinstance(expr, Sqrt):
        return f"sqrt({format_expr(expr.arg, name_of)})"
    if isinstance(expr, Transc):
        return f"{expr.kind.value}({format_expr(expr.arg, name_of)})"
    if isinstance(expr, Let):
        binding = format_expr(expr.binding, name_of)
        body = format_expr(expr.body, name_of)
        return f"(let {name_of(expr.index)} = {binding} in {body})"
    if isinstance(expr, IfThenElse):
        cond = condition_expr(expr)
        if isinstance(cond, Sub):
            test = f"{format_expr(cond.left, name_of)} >= {format_expr(cond.right, name_of)}"
        else:
            test = f"{format_expr(cond, name_of)} >= 0"
        then = format_expr(expr.then, name_of)
        orelse = format_expr(expr.orelse, name_of)
        return f"(if ({test}) then {then} else {orelse})"
    raise TypeError(f"unexpected node {type(expr).__name__}")


def pretty_print(spec: ProgramSpec) -> str:
    """Source text that parses back to an equal program."""
    params = " ".join(spec.names)
    name_of = spec.variable_name
    box = "; ".join(f"({format_decimal(iv.lo)}, {format_decimal(iv.hi)})" for iv in spec.box)
    lines = [f"let box_{spec.name} {params} = [{box}];;"]
    if spec.constraints:
        cstr = "; ".join(format_expr(poly_to_expr(g), name_of) for g in spec.constraints)
        lines.append(f"let cstr_{spec.name} {params} = [{cstr}];;")
    if any(spec.uncertainties):
        uncert = "; ".join(format_decimal(u) for u in spec.uncertainties)
        lines.append(f"let uncert_{spec.name} {params} = [{uncert}];;")
    objective = format_expr(spec.objective, name_of)
    lines.append(
        f"let obj_{spec.name} {params} = [({objective}, {format_decimal(spec.target_bound)})];;"
    )
    return "\n".join(lines) + "\n"
