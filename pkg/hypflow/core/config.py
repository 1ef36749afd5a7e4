import os

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application configuration settings."""

    # Parallelism
    THREADS: int = os.cpu_count() or 1

    # Application Settings
    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: str = "runs"

    # Reproducibility
    DEFAULT_SEED: int = 12345

    @property
    def max_workers(self) -> int:
        """Sweep worker cap, never below one."""
        return max(1, self.THREADS)

    # Environment-specific settings
    model_config = SettingsConfigDict(
        env_prefix="HYPFLOW_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )


settings = Settings()
