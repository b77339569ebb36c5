"""Tests for environment defaults and setting resolution."""

import pytest

from src.errors import ConfigError
from src.settings import DEFAULT_OUTPUT_DIR, env_defaults, resolve


@pytest.fixture
def clean_env(monkeypatch):
    for name in ("MLPG_JOBS", "MLPG_LOG_LEVEL", "MLPG_OUTPUT_DIR", "MLPG_SEED"):
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


def test_builtin_defaults(clean_env):
    env = env_defaults()
    assert (env.jobs, env.log_level, env.output_dir, env.seed) == (1, "INFO", DEFAULT_OUTPUT_DIR, 0)


def test_environment_values(clean_env):
    clean_env.setenv("MLPG_JOBS", "4")
    clean_env.setenv("MLPG_LOG_LEVEL", "debug")
    clean_env.setenv("MLPG_OUTPUT_DIR", "/tmp/out")
    clean_env.setenv("MLPG_SEED", "17")
    env = env_defaults()
    assert (env.jobs, env.log_level, env.output_dir, env.seed) == (4, "DEBUG", "/tmp/out", 17)


def test_blank_values_fall_back(clean_env):
    clean_env.setenv("MLPG_JOBS", "  ")
    assert env_defaults().jobs == 1


@pytest.mark.parametrize(
    "name, value",
    [("MLPG_JOBS", "two"), ("MLPG_JOBS", "0"), ("MLPG_SEED", "-1"), ("MLPG_LOG_LEVEL", "loud")],
)
def test_invalid_environment_values(clean_env, name, value):
    clean_env.setenv(name, value)
    with pytest.raises(ConfigError, match=name):
        env_defaults()


def test_resolution_order():
    assert resolve(3, 2, 1) == 3
    assert resolve(None, 2, 1) == 2
    assert resolve(None, None, 1) == 1
    assert resolve(0, 2, 1) == 0
