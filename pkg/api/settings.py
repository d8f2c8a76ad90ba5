import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, field_validator

# Load environment variables from .env file
load_dotenv()

_API_DIR = os.path.dirname(os.path.abspath(__file__))
DEFAULT_DATABASE_URL = f"sqlite:///{os.path.join(_API_DIR, 'database.db')}"


class Settings(BaseModel):
    """Runtime settings read from TWOSTEP_* environment variables."""
    database_url: str = DEFAULT_DATABASE_URL
    log_dir: str = "logs"
    log_file: str = "twostep.log"
    log_level: str = "INFO"
    fp_tol: float = 1e-14
    fp_max_iter: int = 200
    max_workers: int = 1

    @field_validator("fp_tol")
    @classmethod
    def _positive_tolerance(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("TWOSTEP_FP_TOL must be positive")
        return value

    @field_validator("fp_max_iter", "max_workers")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {value!r}")
        return value

    @classmethod
    def from_env(cls) -> "Settings":
        values = {}
        for name in cls.model_fields:
            raw = os.getenv(f"TWOSTEP_{name.upper()}")
            if raw is not None and raw != "":
                values[name] = raw
        return cls(**values)


@lru_cache(maxsize=None)
def get_settings() -> Settings:
    return Settings.from_env()
