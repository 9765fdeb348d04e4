"""
Configuration management for the micromaser toolkit.

Uses Pydantic Settings for environment variable loading and validation.
"""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables."""

    # Environment
    environment: str = Field(default="development")
    log_level: str = Field(default="INFO")
    log_file: str | None = Field(default=None)

    # Series truncation
    tail_tolerance: float = Field(default=1e-14, gt=0)
    lookahead_terms: int = Field(default=64, ge=4)

    # Pumping runs
    leak_budget: float = Field(default=1e-8, gt=0)
    cross_check_tolerance: float = Field(default=1e-10, gt=0)

    # Weak-coupling analysis ("much less than one")
    weak_coupling_threshold: float = Field(default=0.05, gt=0)
    dominance_threshold: float = Field(default=0.05, gt=0)

    # Batch driver
    max_sweep_runs: int = Field(default=10_000, ge=1)
    csv_significant_digits: int = Field(default=17, ge=1, le=17)
    workers: int = Field(default=1, ge=1)

    model_config = SettingsConfigDict(
        env_prefix="MICROMASER_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )


# Global settings instance
settings = Settings()
