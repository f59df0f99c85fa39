"""Application settings using Pydantic Settings."""

from __future__ import annotations

from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Analyzer settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="ROUNDSOS_",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_env: Literal["development", "production"] = "development"
    log_level: str = "WARNING"

    # Rounding model defaults
    precision: str = "double"
    relaxation_order: int = Field(default=0, ge=0)  # 0 picks the minimal order
    input_rounding: bool = True
    round_constants: bool = True
    neg_error: bool = False
    merge_errors: bool = False
    merge_bound: Literal["linear", "gamma"] = "linear"
    transc_factor: str = "3/2"

    # SDP solver
    solver_backend: str = "embedded"
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 100
    sdpa_executable: str = "sdpa"

    # Interval arithmetic
    interval_precision_bits: int = Field(default=128, ge=90)

    # Certificates
    certificate_denominator_bits: int = 64

    # Engine
    maxplus_points: int = Field(default=3, ge=1)
    max_errors_per_relaxation: int = Field(default=16, ge=1)
    max_moment_variables: int = 6000
    subdivide_budget: int = Field(default=1, ge=1)

    # Sampling oracle
    samples: int = 100_000
    seed: int = 0
    reference_precision_bits: int = 256
    min_acceptance_rate: float = 1e-4

    # CLI
    workers: int = Field(default=4, ge=1)

    @property
    def is_production(self) -> bool:
        """Check if running in production."""
        return self.app_env == "production"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
