from typing import List

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Testbed settings with sensible defaults."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="MEVHAS_",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"

    # Ladder settings
    qps: List[int] = [27, 32, 37, 42]
    extended_qp_mode: bool = False
    jobs: int = 1
    output_dir: str = "./results"

    # Encoder settings
    ctu_size: int = 128
    min_cu: int = 8
    max_mt_depth: int = 3
    lambda_scale: float = 1.0
    rounding_offset: float = 1.0 / 3.0

    # Partition map settings
    cell_size: int = 8

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, value: str) -> str:
        return value.upper()

    @field_validator("jobs")
    @classmethod
    def _positive_jobs(cls, value: int) -> int:
        if value < 1:
            raise ValueError("jobs must be at least 1")
        return value


_settings = None


def get_settings() -> Settings:
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings
