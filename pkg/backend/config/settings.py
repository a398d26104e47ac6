"""
Configuration settings for the application
Manages output locations, run history, threading and solver defaults
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from pathlib import Path

# Base directory
BASE_DIR = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    """Application settings with environment variable support"""

    model_config = SettingsConfigDict(
        env_prefix="BSVIE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Application
    app_name: str = "BSVIE Risk Engine"
    app_version: str = "1.0.0"
    debug: bool = False

    # Reports
    schema_version: str = "1.0"
    csv_float_format: str = "%.17g"

    # File storage (BSVIE_OUTPUT_DIR overrides)
    output_dir: Path = BASE_DIR / "outputs"

    # Run history
    record_history: bool = True
    history_db_name: str = "runs.db"

    # Processing
    max_workers: int = 1
    # Battery workers are capped so concurrent solves fit this many MB
    memory_budget_mb: int = 300

    # Solver defaults
    default_degree: int = 2
    default_ridge: float = 1e-8
    default_tol: float = 1e-6
    default_max_iter: int = 50
    divergence_window: int = 3

    # Lipschitz diagnostics
    h1_sample_count: int = 2000

    # Deterministic BVIE defaults
    bvie_tol: float = 1e-12
    bvie_max_iter: int = 500


# Global settings instance
settings = Settings()
