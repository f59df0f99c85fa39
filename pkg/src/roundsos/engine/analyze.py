"""Entry point of the engine."""

from __future__ import annotations

import time
from typing import Optional

import structlog

from roundsos.engine.branches import bound_nlprog
from roundsos.engine.options import BoundResult, EngineOptions
from roundsos.engine.subdivide import subdivide_and_bound
from roundsos.program.spec import ProgramSpec
from roundsos.program.validate import validate_spec

logger = structlog.get_logger()


def analyze(spec: ProgramSpec, options: Optional[EngineOptions] = None) -> BoundResult:
    """Validate ``spec`` and bound its roundoff error.

    Uses subdivision when the budget allows more than one box, and the
    branch-region analysis when the program holds a conditional.

    Raises:
        RoundSosError: any validation or analysis failure.
    """
    options = options or EngineOptions.from_settings()
    report = validate_spec(spec)
    for warning in report.warnings:
        logger.warning("Program warning", program=spec.name, warning=warning)
    started = time.perf_counter()
    if options.subdivide_budget > 1 or spec.target_bound > 0:
        result = subdivide_and_bound(spec, options)
    else:
        result = bound_nlprog(spec, options)
    logger.info(
        "Analyzed program",
        program=spec.name,
        bound=float(result.bound),
        certified=result.certified,
        fallbacks=len(result.fallbacks),
        seconds=round(time.perf_counter() - started, 3),
    )
    return result
