"""Exceptions and logging shared across roundsos."""

from __future__ import annotations
