"""Process-level defaults read from the environment and an optional project .env file.

Resolution order for every tunable: explicit CLI flag, then the experiment
config value, then the environment, then the built-in default.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from src.errors import ConfigError

try:
    from dotenv import load_dotenv  # type: ignore
except ImportError:  # pragma: no cover - optional dependency
    load_dotenv = None  # type: ignore

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent.parent

DEFAULT_JOBS = 1
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_OUTPUT_DIR = "results"
DEFAULT_SEED = 0
LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")

_ENV_LOADED = False


def load_env_once() -> None:
    """Load the project .env file if present (idempotent)."""
    global _ENV_LOADED
    if _ENV_LOADED or not load_dotenv:
        return
    env_path = PROJECT_ROOT / ".env"
    if env_path.exists():
        load_dotenv(env_path)
        logger.debug(f"Loaded environment defaults from {env_path}")
    _ENV_LOADED = True


def _env_int(name: str, default: int, minimum: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got '{raw}'")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class EnvDefaults:
    jobs: int = DEFAULT_JOBS
    log_level: str = DEFAULT_LOG_LEVEL
    output_dir: str = DEFAULT_OUTPUT_DIR
    seed: int = DEFAULT_SEED


def env_defaults() -> EnvDefaults:
    """Read MLPG_JOBS, MLPG_LOG_LEVEL, MLPG_OUTPUT_DIR and MLPG_SEED."""
    load_env_once()
    level = (os.getenv("MLPG_LOG_LEVEL") or DEFAULT_LOG_LEVEL).upper()
    if level not in LOG_LEVELS:
        raise ConfigError(f"MLPG_LOG_LEVEL must be a logging level name, got '{level}'")
    return EnvDefaults(
        jobs=_env_int("MLPG_JOBS", DEFAULT_JOBS, 1),
        log_level=level,
        output_dir=os.getenv("MLPG_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR,
        seed=_env_int("MLPG_SEED", DEFAULT_SEED, 0),
    )


def resolve(flag: Optional[Any], configured: Optional[Any], env_value: Any) -> Any:
    """First of CLI flag and config value that is set, else the environment/default value."""
    if flag is not None:
        return flag
    if configured is not None:
        return configured
    return env_value
