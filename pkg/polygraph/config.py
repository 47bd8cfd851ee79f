"""
Runtime settings for polygraph.

Defaults can be overridden through POLYGRAPH_* environment variables or a
.env file in the working directory.
"""

import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

ENV_PREFIX = "POLYGRAPH_"
LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")


class Settings(BaseModel):
    """Engine limits and defaults."""

    max_supersteps: int = Field(10_000, ge=1)
    max_async_updates: int = Field(10_000_000, ge=1)
    max_messages_per_superstep: int = Field(20_000_000, ge=1)
    oracle_max_vertices: int = Field(2_000, ge=1)
    checkpoint_dir: Path = Path("checkpoints")
    strict_checkpoints: bool = False
    log_level: str = "WARNING"

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"unknown log level {value!r}")
        return level


def _from_environment() -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    for name in Settings.model_fields:
        raw = os.environ.get(ENV_PREFIX + name.upper())
        if raw is not None and raw != "":
            values[name] = raw
    return values


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Load settings once per process."""
    load_dotenv()
    try:
        settings = Settings(**_from_environment())
    except ValidationError as e:
        raise ConfigurationError(f"invalid POLYGRAPH_* setting: {e}") from e
    logger.debug(f"Loaded settings: {settings.model_dump()}")
    return settings


def resolve(value: Optional[Any], name: str) -> Any:
    """Return value, or the named setting when value is None."""
    if value is not None:
        return value
    return getattr(get_settings(), name)
