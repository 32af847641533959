"""Configuration management for lfsgeo."""

import logging
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Application settings, overridable through ``LFSGEO_*`` environment variables."""

    # Execution
    threads: int = 1
    seed: int = 0
    log_level: str = "INFO"
    chunk_size: int = 1024

    # Bound-check tolerances (relative, except the absolute floor)
    analytic_tolerance: float = 1e-9
    oracle_tolerance: float = 1e-3
    absolute_floor: float = 1e-12

    # Medial-axis oracle sampling step (length units of the manifold)
    oracle_resolution: float = 1e-4
    ellipsoid_oracle_resolution: float = 1e-3

    # Pair construction
    pair_retry_cap: int = 8
    max_failure_fraction: float = 0.01

    # Reporting
    histogram_buckets: int = 32
    max_ambient_dim: int = 16

    model_config = SettingsConfigDict(
        env_prefix="LFSGEO_",
        env_file=str(Path(__file__).parent.parent / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


settings = Settings()

logger.debug(
    "Settings loaded | threads=%d seed=%d env_file_exists=%s",
    settings.threads,
    settings.seed,
    (Path(__file__).parent.parent / ".env").exists(),
)
