import logging
import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from src.errors import ConfigurationError


class RuntimeSettings(BaseModel):
    """Process-wide runtime knobs, resolved from defaults, environment and overrides"""

    threads: int = Field(
        default_factory=lambda: os.cpu_count() or 1,
        ge=1,
        description="Upper bound on worker threads used for Monte Carlo trial blocks",
    )
    log_level: str = Field(default="INFO", description="Level of the package logger")
    max_codewords: int = Field(
        default=256,
        ge=1,
        description="Largest number of codewords materialized for link simulation",
    )

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in logging.getLevelNamesMapping():
            raise ValueError(f"Unknown log level: {value}")
        return level


# Environment variable for each settings field
ENV_MAP = {
    "threads": "COVERTSLOT_THREADS",
    "log_level": "COVERTSLOT_LOG_LEVEL",
    "max_codewords": "COVERTSLOT_MAX_CODEWORDS",
}

_settings: Optional[RuntimeSettings] = None


def init_settings(**overrides: Any) -> RuntimeSettings:
    """Initialize runtime settings with an environment-first approach"""
    global _settings
    load_dotenv()

    # Map environment variables, then apply explicit overrides
    values: Dict[str, Any] = {}
    for field_name, env_var in ENV_MAP.items():
        if env_value := os.getenv(env_var):
            values[field_name] = env_value
    values.update({k: v for k, v in overrides.items() if v is not None})

    try:
        _settings = RuntimeSettings(**values)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid runtime settings: {e}") from e

    configure_logging(_settings.log_level)
    return _settings


def get_settings() -> RuntimeSettings:
    """Return the active settings, initializing them on first use"""
    if _settings is None:
        return init_settings()
    return _settings


def configure_logging(level: str = "INFO") -> None:
    """Attach a single stream handler to the package logger"""
    logger = logging.getLogger("src")
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
