"""Settings and constants."""

from __future__ import annotations

from roundsos.config.settings import Settings, get_settings, settings

__all__ = ["Settings", "get_settings", "settings"]
