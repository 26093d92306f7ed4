from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    APP_NAME: str = "Tactile Contour Workbench"
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: Literal["console", "json"] = "console"
    DEFAULT_SEED: int = 7
    WORKERS: int = 1
    IMAGE_SIZE: int = 128
    IMAGE_SPAN_MM: float = 44.0
    BLOB_SIGMA_PX: float = 1.5
    PIXEL_NOISE: float = 0.01
    COMPUTE_DTYPE: Literal["float64", "float32"] = "float64"
    OUTPUT_DIR: str = "runs"

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=True, extra="ignore"
    )


settings = Settings()
