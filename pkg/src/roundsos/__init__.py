"""roundsos - certified roundoff-error bounds via sparse sums of squares."""

from __future__ import annotations

__version__ = "0.1.0"
