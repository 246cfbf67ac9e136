"""Process-wide settings for trotterml.

These control how a run executes, never what it computes: nothing here enters
a config hash. Each field can be overridden from the environment.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name, "").strip()
    return int(raw) if raw.isdigit() and int(raw) > 0 else default


@dataclass
class Settings:
    """Execution settings outside a run's TOML config."""

    # Generation pool
    worker_count: int = field(
        default_factory=lambda: _env_int("TROTTERML_WORKERS", max(1, (os.cpu_count() or 2) - 1))
    )
    chunk_size: int = 64  # jobs handed to a worker at once
    pool_kind: str = field(
        default_factory=lambda: os.environ.get("TROTTERML_POOL", "process").strip().lower()
    )

    log_level: str = field(default_factory=lambda: os.environ.get("TROTTERML_LOG_LEVEL", "INFO"))

    # Simulator
    max_qubits: int = 6
    debug_checks: bool = field(default_factory=lambda: _env_flag("TROTTERML_DEBUG"))


# Global singleton
settings = Settings()
