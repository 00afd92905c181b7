from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    pass


class LocalSettings(Settings):
    # Overridden by HJGRAPH_* environment variables or the env file
    LOG_LEVEL: str = "INFO"
    LOG_CONFIG: str = "logging.ini"
    THREADS: int = 1
    SITE_BUDGET: int = 250_000
    MAX_SNAPSHOTS: int = 4_000
    OUTPUT_DIR: str = "out"

    model_config = SettingsConfigDict(
        env_prefix="HJGRAPH_", env_file=".env/.env.local", extra="ignore"
    )


@lru_cache(maxsize=1)
def get_settings() -> LocalSettings:
    return LocalSettings()
