"""Application constants."""

from __future__ import annotations

from enum import Enum
from typing import NamedTuple, Optional

TOOL_NAME = "roundsos"
JSON_SCHEMA_VERSION = "1.0"


class TranscKind(str, Enum):
    """Transcendental functions understood by the DSL."""

    EXP = "exp"
    LOG = "log"
    SIN = "sin"
    COS = "cos"
    TAN = "tan"
    ASIN = "asin"
    ACOS = "acos"
    ATAN = "atan"


# Spellings accepted by the parser
TRANSC_ALIASES: dict[str, TranscKind] = {
    "exp": TranscKind.EXP,
    "log": TranscKind.LOG,
    "sin": TranscKind.SIN,
    "cos": TranscKind.COS,
    "tan": TranscKind.TAN,
    "asin": TranscKind.ASIN,
    "acos": TranscKind.ACOS,
    "atan": TranscKind.ATAN,
    "arcsin": TranscKind.ASIN,
    "arccos": TranscKind.ACOS,
    "arctan": TranscKind.ATAN,
}


class FpPrecisionName(str, Enum):
    """Named IEEE-754 binary formats."""

    SINGLE = "single"
    DOUBLE = "double"
    QUAD = "quad"


PRECISION_BITS: dict[FpPrecisionName, int] = {
    FpPrecisionName.SINGLE: 24,
    FpPrecisionName.DOUBLE: 53,
    FpPrecisionName.QUAD: 113,
}


class SolveStatus(str, Enum):
    """Outcome of an SDP solve."""

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_TROUBLE = "numerical_trouble"
    ITERATION_LIMIT = "iteration_limit"


class Sense(str, Enum):
    """Optimization sense of a bound computation."""

    MIN = "min"
    MAX = "max"


class SolverBackend(str, Enum):
    """SDP backends selectable from the CLI."""

    EMBEDDED = "embedded"
    SDPA_FILES = "sdpa-files"


class ExitCode:
    """CLI exit codes."""

    SUCCESS = 0
    PARSE_ERROR = 2
    ANALYSIS_FAILURE = 3


class ReferenceBounds(NamedTuple):
    """Published absolute-error bounds for one benchmark (None where a tool gave no result)."""

    row: str
    real2float: Optional[float]
    rosa: Optional[float]
    fptaylor_simple: Optional[float]
    fptaylor_improved: Optional[float]
    gappa: Optional[float]
    fluctuat: Optional[float]
    lower_bound: float


# Double precision, real inputs, simple rounding model.
REFERENCE_BOUNDS: dict[str, ReferenceBounds] = {
    "rigidbody1": ReferenceBounds("a", 5.33e-13, 5.08e-13, 3.87e-13, 2.95e-13, 2.95e-13, 3.22e-13, 2.28e-13),
    "rigidbody2": ReferenceBounds("b", 6.48e-11, 6.48e-11, 5.24e-11, 3.61e-11, 3.61e-11, 3.65e-11, 2.19e-11),
    "kepler0": ReferenceBounds("c", 1.18e-13, 1.16e-13, 1.05e-13, 7.47e-14, 1.12e-13, 1.26e-13, 2.23e-14),
    "kepler1": ReferenceBounds("d", 4.47e-13, 6.49e-13, 4.49e-13, 2.87e-13, 4.89e-13, 5.57e-13, 7.58e-14),
    "kepler2": ReferenceBounds("e", 2.09e-12, 2.89e-12, 2.10e-12, 1.58e-12, 2.45e-12, 2.90e-12, 3.03e-13),
    "sinetaylor": ReferenceBounds("f", 6.03e-16, 9.56e-16, 6.75e-16, 4.44e-16, 8.33e-02, 6.86e-16, 2.85e-16),
    "sineorder3": ReferenceBounds("g", 1.19e-15, 1.11e-15, 9.97e-16, 7.95e-16, 7.62e-16, 1.03e-15, 3.34e-16),
    "sqroot": ReferenceBounds("h", 1.29e-15, 8.41e-16, 7.13e-16, 5.02e-16, 5.37e-16, 3.21e-13, 4.45e-16),
    "himmilbeau": ReferenceBounds("i", 1.43e-12, 1.43e-12, 1.32e-12, 1.01e-12, 1.01e-12, 1.01e-12, 1.47e-13),
    "doppler1": ReferenceBounds("j", 7.65e-12, 4.92e-13, 1.59e-13, 1.29e-13, 1.82e-13, 1.34e-13, 7.11e-14),
    "doppler2": ReferenceBounds("k", 1.57e-11, 1.29e-12, 2.90e-13, 2.39e-13, 3.23e-13, 2.53e-13, 1.14e-13),
    "doppler3": ReferenceBounds("l", 8.55e-12, 2.03e-13, 8.22e-14, 6.96e-14, 9.29e-14, 7.36e-14, 4.27e-14),
    "verhulst": ReferenceBounds("m", 4.67e-16, 6.82e-16, 3.53e-16, 2.50e-16, 3.18e-16, 4.84e-16, 2.23e-16),
    "carbongas": ReferenceBounds("n", 2.21e-08, 4.64e-08, 1.23e-08, 7.77e-09, 8.85e-09, 1.86e-08, 4.11e-09),
    "predprey": ReferenceBounds("o", 2.52e-16, 2.94e-16, 1.89e-16, 1.60e-16, 1.95e-16, 2.45e-16, 1.47e-16),
    "turbine1": ReferenceBounds("p", 2.45e-11, 1.25e-13, 2.33e-14, 1.67e-14, 3.88e-14, 6.09e-14, 1.07e-14),
    "turbine2": ReferenceBounds("q", 2.08e-12, 1.76e-13, 3.14e-14, 2.01e-14, 3.97e-14, 8.96e-14, 1.43e-14),
    "turbine3": ReferenceBounds("r", 1.71e-11, 8.50e-14, 1.70e-14, 9.58e-15, 9.96e00, 4.90e-14, 5.33e-15),
    "jet": ReferenceBounds("s", None, 1.62e-08, 1.50e-11, 1.03e-11, 1.32e05, 1.82e-11, 5.46e-12),
    "floudas2_6": ReferenceBounds("t", 5.15e-13, 5.87e-13, 7.88e-13, 5.94e-13, 5.98e-13, 7.45e-13, 4.56e-14),
    "floudas3_3": ReferenceBounds("u", 5.81e-13, 4.05e-13, 5.76e-13, 4.29e-13, 2.65e-13, 4.32e-13, 1.48e-13),
    "floudas3_4": ReferenceBounds("v", 2.78e-15, 2.56e-15, 2.23e-15, 1.78e-15, 1.23e-15, 2.23e-15, 3.80e-16),
    "floudas4_6": ReferenceBounds("w", 1.82e-15, 1.33e-15, 1.23e-15, 8.89e-16, 8.89e-16, 1.12e-15, 2.35e-16),
    "floudas4_7": ReferenceBounds("x", 1.06e-14, 1.31e-14, 1.80e-14, 1.32e-14, 7.44e-15, 1.71e-14, 7.31e-15),
    "cav10": ReferenceBounds("y", 2.91e00, 2.91e00, None, None, None, 1.02e02, 2.90e00),
    "perin": ReferenceBounds("z", 2.01e00, 2.01e00, None, None, None, 4.91e01, 2.00e00),
    "logexp": ReferenceBounds("alpha", 2.52e-15, None, 2.07e-15, 1.99e-15, None, None, 1.19e-15),
    "sphere": ReferenceBounds("beta", 1.53e-14, None, 1.29e-14, 8.21e-15, None, None, 5.05e-15),
    "hartman3": ReferenceBounds("gamma", 2.99e-13, None, 1.34e-14, 4.97e-15, None, None, 1.10e-15),
    "hartman6": ReferenceBounds("delta", 5.09e-13, None, 2.55e-14, 8.19e-15, None, None, 2.20e-15),
}


def reference_for(benchmark: str) -> Optional[ReferenceBounds]:
    """Look up published bounds by benchmark id (case-insensitive)."""
    return REFERENCE_BOUNDS.get(benchmark.lower())
