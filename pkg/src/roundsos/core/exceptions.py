"""Custom exceptions for roundsos."""

from __future__ import annotations

from typing import Any, Optional


class RoundSosError(Exception):
    """Base exception for roundsos."""

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class ConfigurationError(RoundSosError):
    """Configuration related errors."""

    pass


# Program front end


class ParseError(RoundSosError):
    """Malformed DSL source or certificate text."""

    def __init__(
        self, message: str, line: int = 0, col: int = 0, **kwargs: Any
    ) -> None:
        super().__init__(f"{message} (line {line}, col {col})", **kwargs)
        self.line = line
        self.col = col


class UnknownVariable(ParseError):
    """Identifier not declared by the program or a let-binding."""

    pass


class ArityMismatch(RoundSosError):
    """Bindings disagree on the declared variables or the box length."""

    pass


class NestedConditional(RoundSosError):
    """Conditional nested inside another conditional."""

    pass


class EmptyBox(RoundSosError):
    """Input interval with lower endpoint above upper endpoint."""

    pass


class NonDifferentiable(RoundSosError):
    """Symbolic differentiation reached a conditional."""

    pass


class NotPolynomial(RoundSosError):
    """Expression contains division, square root, transcendental calls or branches."""

    pass


# Arithmetic


class EpsTooLargeForChain(RoundSosError):
    """Machine epsilon too large to merge a product chain of the given length."""

    def __init__(self, message: str, chain_length: int, **kwargs: Any) -> None:
        super().__init__(message, **kwargs)
        self.chain_length = chain_length


class DivisionByZeroInterval(RoundSosError):
    """Denominator enclosure contains zero."""

    pass


class DomainViolation(RoundSosError):
    """Argument enclosure leaves the domain of the operation."""

    def __init__(self, message: str, op: str = "", **kwargs: Any) -> None:
        super().__init__(message, **kwargs)
        self.op = op


# Relaxations and solving


class OrderTooSmall(RoundSosError):
    """Relaxation order cannot represent the objective or a constraint."""

    pass


class CliqueCoverageFailure(RoundSosError):
    """Some monomial or constraint is not contained in any clique."""

    pass


class RipFailure(RoundSosError):
    """Clique family admits no ordering with the running intersection property."""

    def __init__(self, message: str, witness: int = -1, **kwargs: Any) -> None:
        super().__init__(message, **kwargs)
        self.witness = witness


class SolverError(RoundSosError):
    """SDP backend could not be run."""

    pass


class MalformedSolutionFile(RoundSosError):
    """SDPA result text is truncated or inconsistent."""

    pass


# Certificates


class ExtractionDegenerate(RoundSosError):
    """Every pivot of every Gram block was clipped."""

    pass


class MalformedCertificate(RoundSosError):
    """Certificate has negative weights or does not match its problem."""

    pass


# Engine and CLI


class BudgetExhausted(RoundSosError):
    """Subdivision budget spent before the target bound was reached."""

    def __init__(self, message: str, best_bound: Any = None, **kwargs: Any) -> None:
        super().__init__(message, **kwargs)
        self.best_bound = best_bound


class RejectionSamplingStarved(RoundSosError):
    """Constraint acceptance rate fell below the configured minimum."""

    pass
