"""Exact sparse multivariate polynomial algebra."""

from __future__ import annotations

from roundsos.polynomial.poly import (
    ONE,
    Monomial,
    Poly,
    differentiate,
    evaluate,
    format_terms,
    monomial,
    monomial_basis,
    parse_terms,
    poly_arith,
    support_and_degree,
)

__all__ = [
    "ONE",
    "Monomial",
    "Poly",
    "differentiate",
    "evaluate",
    "format_terms",
    "monomial",
    "monomial_basis",
    "parse_terms",
    "poly_arith",
    "support_and_degree",
]
