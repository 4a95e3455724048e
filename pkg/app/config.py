"""Configuration management for the distribution learning application."""

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Active learning defaults
    eps_bar: float = 0.2
    kbar: float = 2.0
    pool_size: int = 1_000_000
    init_size: int = 12
    budget: int = 500
    conventional_thresholds: int = 101

    # Experiment defaults
    runs: int = 10
    master_seed: int = 2024
    bouc_wen_reference_samples: int = 100_000
    ishigami_reference_samples: int = 10_000_000
    reference_seed: int = 7

    # Numerics
    prediction_chunk_size: int = 20_000
    optimizer_starts: int = 5
    bouc_wen_dt: float = 0.002
    bouc_wen_batch_size: int = 5_000

    # Output
    output_dir: str = "results"
    reference_dir: str = "references"
    include_timings: bool = False

    # Execution
    workers: int = 1
    log_level: str = "INFO"

    # Environment
    environment: str = "development"
    debug: bool = True

    # API Configuration
    api_v1_prefix: str = "/api/v1"
    cors_origins: str = "*"  # Comma-separated origins or "*"

    class Config:
        env_file = ".env"
        case_sensitive = False


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get application settings."""
    return settings
