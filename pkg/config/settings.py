"""
Application settings using Pydantic.

Loads process-level configuration (logging, output location, parallelism)
from environment variables prefixed ``RHALC_`` with sensible defaults.
Experiment parameters live in run configuration documents, see
``config.schemas``.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache


class Settings(BaseSettings):
    """
    Application configuration settings.

    All settings can be overridden via environment variables, e.g.
    ``RHALC_LOG_LEVEL=DEBUG``.
    """

    # Logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Outputs
    output_dir: str = "runs"

    # Execution
    workers: int = 1

    # Extra directory searched for track files before the bundled ones
    track_dir: str = ""

    model_config = SettingsConfigDict(
        env_prefix="RHALC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached settings instance.

    Returns:
        Settings object with current configuration.
    """
    return Settings()
