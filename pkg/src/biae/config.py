"""Single-file configuration with flag overrides.

The BIAE_CONFIG environment variable (or an explicit --config flag) points
at a YAML or JSON file; any CLI flag beats the file, which beats the
defaults below.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from .errors import ValidationError

ENV_VAR = "BIAE_CONFIG"


@dataclass
class AppConfig:
    data_dir: str = "data/sharc"
    checkpoint: str = "checkpoint.npz"
    encoder: str = "toy:13:32"
    oracle: str = "hash:13:64"
    decision_weight: float = 2.0
    learning_rate: float = 5e-5
    epochs: int = 5
    batch_size: int = 20
    dropout: float = 0.3
    warmup_fraction: float = 0.1
    seed: int = 13
    turn_cap: int = 8
    host: str = "127.0.0.1"
    port: int = 8000


def load_app_config(path: str | Path | None = None) -> AppConfig:
    """Defaults, then the config file (if any)."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    config = AppConfig()
    if path is None:
        return config
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(loaded, dict):
        raise ValidationError(f"config file must hold a mapping: {path}")
    known = {f.name: f.type for f in fields(AppConfig)}
    for key, value in loaded.items():
        if key not in known:
            raise ValidationError(f"unknown config key {key!r} in {path}")
        setattr(config, key, value)
    return config


def apply_overrides(config: AppConfig, **overrides) -> AppConfig:
    """Non-None keyword values beat the config file."""
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    return config
