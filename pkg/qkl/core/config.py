"""Centralized runtime configuration using Pydantic settings.

This module defines `QKLSettings`, the runtime knobs that never change the
meaning of an experiment. Values are loaded from a `.env` file at the
repository root (resolved relative to this file) and from environment
variables prefixed with `QKL_`. Key settings include:

- `LOG_LEVEL` / `LOG_JSON`: loguru sink level and serialization.
- `DEFAULT_WORKERS`: worker count used when neither config nor CLI sets one.
- `MAX_QUBITS`: statevector memory guard.
- `OUTPUT_DIR`: fallback output directory.

Experiment semantics live in `qkl.schemas.experiment.ExperimentConfig`.
"""
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class QKLSettings(BaseSettings):
    """Runtime settings with helpful defaults.

    Use `get_settings()` to obtain a singleton instance throughout the package.
    """
    LOG_LEVEL: str = Field(default="INFO")
    LOG_JSON: bool = Field(default=False)
    DEFAULT_WORKERS: int = Field(default=1, ge=1)
    # 2^20 complex128 amplitudes = 16 MiB per state
    MAX_QUBITS: int = Field(default=20, ge=1, le=26)
    OUTPUT_DIR: str = Field(default="outputs")

    _ENV_PATH = Path(__file__).resolve().parents[2] / ".env"
    model_config = SettingsConfigDict(
        env_file=str(_ENV_PATH),
        env_prefix="QKL_",
        case_sensitive=False,
        extra="ignore",
    )


_settings: QKLSettings | None = None


def get_settings() -> QKLSettings:
    """Return a process-wide cached settings instance."""
    global _settings
    if _settings is None:
        _settings = QKLSettings()
    return _settings
