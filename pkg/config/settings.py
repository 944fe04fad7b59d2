"""Configuration settings for charkit."""

from functools import lru_cache
from typing import Optional

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numeric defaults and logging level, overridable through ``CHARKIT_*`` variables."""

    model_config = SettingsConfigDict(env_prefix="CHARKIT_", env_file=".env", case_sensitive=False, extra="ignore")

    seed: Optional[int] = None
    trials: int = 16
    h: float = 1e-3
    steps: int = 1000

    rank_tol: float = 1e-9
    newton_max_iter: int = 50
    newton_tol: float = 1e-12
    strip_tol: float = 1e-10
    characteristic_tol: float = 1e-10
    overflow_guard: float = 1e12
    isotropy_tol: float = 1e-6
    energy_tol: float = 1e-8
    transversality_angle: float = 1e-6

    log_level: str = "WARNING"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings.

    Loads values from:
    1. Environment variables (``CHARKIT_SEED``, ``CHARKIT_LOG_LEVEL``, ...)
    2. A ``.env`` file in the working directory

    Returns:
        Settings: Validated settings

    Raises:
        ValidationError: If a variable cannot be converted to its field type
    """
    load_dotenv()
    return Settings()
