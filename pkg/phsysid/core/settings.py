"""
Runtime Settings
Environment-driven configuration for logging, output paths and defaults
"""

from functools import lru_cache

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings read from PHSYSID_* environment variables"""

    model_config = SettingsConfigDict(env_prefix="PHSYSID_", extra="ignore")

    log_level: str = Field("INFO", description="Minimum level for the stderr sink")
    log_dir: str = Field("logs", description="Directory for rotating log files")
    output_dir: str = Field("runs", description="Default directory for CLI outputs")
    default_seed: int = Field(0, description="Seed used when neither config nor CLI sets one")
    budget: str = Field("paper", description="Default data/epoch budget: paper or desk")
    run_slow_tests: bool = Field(False, description="Enable full-budget preset runs in the test suite")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Load settings once per process

    Returns:
        Cached Settings instance
    """
    load_dotenv()
    return Settings()
