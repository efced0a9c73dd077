"""Shared TOML configuration for the CLI subcommands.

Unknown keys are rejected so typos fail loudly; referenced input files
must exist at load time. The config path can also come from the
UIHARVEST_CONFIG environment variable.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

ENV_VAR = "UIHARVEST_CONFIG"

_SCHEMA: dict[str, dict[str, type]] = {
    "coordinator": {
        "host": str,
        "port": int,
        "address": str,
        "lease_ttl_secs": (int, float),
        "snapshot_path": str,
    },
    "frontier": {
        "p_min": (int, float),
        "max_queued_per_host": int,
        "seed_file": str,
    },
    "dataset": {
        "root": str,
        "salt": str,
    },
    "worker": {
        "browser_endpoint": str,
        "profiles_file": str,
        "probes_dir": str,
        "budget_total_secs": (int, float),
        "per_device_nav_secs": (int, float),
    },
}


@dataclass
class ToolConfig:
    coordinator_host: str = "127.0.0.1"
    coordinator_port: int = 8321
    coordinator_address: str = ""
    lease_ttl_secs: float = 480.0
    snapshot_path: str | None = None
    p_min: float = 0.05
    max_queued_per_host: int = 1000
    seed_file: str | None = None
    dataset_root: str = "data"
    salt: str = "uiharvest-v1"
    browser_endpoint: str = "http://127.0.0.1:9222"
    profiles_file: str | None = None
    probes_dir: str | None = None
    budget_total_secs: float = 360.0
    per_device_nav_secs: float = 45.0

    def __post_init__(self) -> None:
        if not self.coordinator_address:
            self.coordinator_address = (
                f"http://{self.coordinator_host}:{self.coordinator_port}"
            )


def _check_keys(data: dict) -> None:
    for section, values in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"section [{section}] must be a table")
        for key, value in values.items():
            expected = _SCHEMA[section].get(key)
            if expected is None:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            if not isinstance(value, expected):
                raise ConfigError(
                    f"key {section}.{key} has wrong type {type(value).__name__}"
                )


def load_config(path: str | Path | None = None) -> ToolConfig:
    """Load config from a path, the env var, or fall back to defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return ToolConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML in {path}: {exc}") from exc
    _check_keys(data)

    base = path.parent

    def resolve(value: str | None) -> str | None:
        if value is None:
            return None
        candidate = Path(value)
        return str(candidate if candidate.is_absolute() else base / candidate)

    coordinator = data.get("coordinator", {})
    frontier = data.get("frontier", {})
    dataset = data.get("dataset", {})
    worker = data.get("worker", {})
    cfg = ToolConfig(
        coordinator_host=coordinator.get("host", "127.0.0.1"),
        coordinator_port=coordinator.get("port", 8321),
        coordinator_address=coordinator.get("address", ""),
        lease_ttl_secs=float(coordinator.get("lease_ttl_secs", 480.0)),
        snapshot_path=resolve(coordinator.get("snapshot_path")),
        p_min=float(frontier.get("p_min", 0.05)),
        max_queued_per_host=frontier.get("max_queued_per_host", 1000),
        seed_file=resolve(frontier.get("seed_file")),
        dataset_root=resolve(dataset.get("root")) or "data",
        salt=dataset.get("salt", "uiharvest-v1"),
        browser_endpoint=worker.get("browser_endpoint", "http://127.0.0.1:9222"),
        profiles_file=resolve(worker.get("profiles_file")),
        probes_dir=resolve(worker.get("probes_dir")),
        budget_total_secs=float(worker.get("budget_total_secs", 360.0)),
        per_device_nav_secs=float(worker.get("per_device_nav_secs", 45.0)),
    )
    for label, ref in (
        ("frontier.seed_file", cfg.seed_file),
        ("worker.profiles_file", cfg.profiles_file),
        ("worker.probes_dir", cfg.probes_dir),
    ):
        if ref is not None and not Path(ref).exists():
            raise ConfigError(f"{label} points to a missing path: {ref}")
    return cfg
