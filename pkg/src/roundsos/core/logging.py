"""Structured logging configuration."""

from __future__ import annotations

import logging
import sys

import structlog

from roundsos.config.settings import settings


def setup_logging(level: str | None = None) -> None:
    """Configure structured logging with structlog.

    Logs go to stderr; stdout is reserved for analysis results.
    """
    level_name = (level or settings.log_level).upper()
    numeric_level = getattr(logging, level_name, logging.WARNING)

    # Determine if we should use pretty printing (development) or JSON (production)
    if settings.is_production:
        renderer = structlog.processors.JSONRenderer()
    else:
        renderer = structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty())

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )

    # Also configure standard logging for third-party libraries
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=numeric_level,
    )

    # Reduce noise from numeric libraries
    logging.getLogger("networkx").setLevel(logging.WARNING)
    logging.getLogger("numpy").setLevel(logging.WARNING)


# Initialize logging on import
setup_logging()
