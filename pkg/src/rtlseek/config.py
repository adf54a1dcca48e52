"""Flat ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored. Values are bare text;
surrounding whitespace is stripped. Recognised keys:

    stage             2 or 3
    external_command  simulator command template containing {design}
    sim_timeout       seconds, > 0
    history           path to the think-length history file
    grpo_eps          clip epsilon in (0, 1]
    grpo_beta         KL coefficient, >= 0
    grpo_group_size   integer >= 2
    grpo_lr           learning rate, > 0
    grpo_seed         integer

Any other key is an error. Relative paths are kept as written.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional, Union

ENV_VAR = "RTLSEEK_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AppConfig:
    stage: int = 3
    external_command: Optional[str] = None
    sim_timeout: float = 30.0
    history: Optional[str] = None
    grpo_eps: float = 0.2
    grpo_beta: float = 0.04
    grpo_group_size: int = 8
    grpo_lr: float = 0.1
    grpo_seed: int = 42

    def updated(self, **changes: Any) -> "AppConfig":
        """Copy with the non-None ``changes`` applied and re-validated."""
        cfg = replace(self, **{k: v for k, v in changes.items() if v is not None})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.stage not in (2, 3):
            raise ConfigError(f"stage must be 2 or 3, got {self.stage}")
        if self.external_command is not None and "{design}" not in self.external_command:
            raise ConfigError("external_command must contain {design}")
        if not (self.sim_timeout > 0 and math.isfinite(self.sim_timeout)):
            raise ConfigError("sim_timeout must be a positive number")
        if not (0 < self.grpo_eps <= 1):
            raise ConfigError("grpo_eps must be in (0, 1]")
        if not (self.grpo_beta >= 0 and math.isfinite(self.grpo_beta)):
            raise ConfigError("grpo_beta must be a non-negative number")
        if self.grpo_group_size < 2:
            raise ConfigError("grpo_group_size must be at least 2")
        if not (self.grpo_lr > 0 and math.isfinite(self.grpo_lr)):
            raise ConfigError("grpo_lr must be a positive number")


_TYPES = {f.name: f.type for f in fields(AppConfig)}


def _convert(key: str, text: str, where: str) -> Any:
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"{where}: {key} expects {kind}, got {text!r}") from None
    return text


def parse_config(text: str, source: str = "<config>") -> AppConfig:
    values: dict[str, Any] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{n}"
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{where}: expected 'key = value'")
        if key not in _TYPES:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: {key} given twice")
        values[key] = _convert(key, value, where)
    cfg = AppConfig(**values)
    try:
        cfg.validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return cfg


def load_config(path: Optional[Union[str, Path]] = None) -> AppConfig:
    """Load ``path``, else the file named by RTLSEEK_CONFIG, else defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return AppConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))
