"""Outward-safe interval arithmetic with rational endpoints."""

from __future__ import annotations

from roundsos.interval.arith import Interval, interval_arith

__all__ = ["Interval", "interval_arith"]
