"""Runtime configuration: flags > environment > config file > defaults.

Environment variables use the ``WALKNOTIFY_`` prefix (``WALKNOTIFY_PORT``,
``WALKNOTIFY_DATA_DIR``, ``WALKNOTIFY_RADIUS_M``, ...).  The optional
config file is JSON with the same keys as the flags.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Optional

from .selector import SelectorConfig

ENV_PREFIX = "WALKNOTIFY_"

_INT_KEYS = {"port", "utc_offset_min"}
_SELECTOR_KEYS = tuple(f.name for f in fields(SelectorConfig))


@dataclass(frozen=True)
class CliConfig:
    """Effective service/CLI configuration."""

    data_dir: Optional[Path] = None
    port: int = 8000
    selector: SelectorConfig = SelectorConfig()

    def describe(self) -> str:
        parts = [f"data_dir={self.data_dir or '(memory only)'}", f"port={self.port}"]
        parts += [f"{k}={getattr(self.selector, k)!r}" for k in _SELECTOR_KEYS]
        return "config: " + " ".join(parts)


def _coerce(key: str, value: object) -> object:
    if key == "data_dir":
        return Path(str(value))
    if key in _INT_KEYS:
        return int(str(value))
    return float(str(value))


def resolve_config(
    flags: Optional[Mapping[str, object]] = None,
    env: Optional[Mapping[str, str]] = None,
    config_file: Optional[str | Path] = None,
) -> CliConfig:
    """Merge the three config sources over the defaults and validate.

    ``flags`` entries with value ``None`` count as "not given".  Raises
    ``ValueError`` for unknown keys or invalid values, before any side
    effect.
    """
    env = os.environ if env is None else env
    merged: dict[str, object] = {}

    if config_file is None and env.get(ENV_PREFIX + "CONFIG"):
        config_file = env[ENV_PREFIX + "CONFIG"]
    if config_file is not None:
        try:
            loaded = json.loads(Path(config_file).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config file {config_file}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {config_file} must hold a JSON object")
        merged.update(loaded)

    for key in ("data_dir", "port", *_SELECTOR_KEYS):
        env_value = env.get(ENV_PREFIX + key.upper())
        if env_value is not None and env_value != "":
            merged[key] = env_value

    for key, value in (flags or {}).items():
        if value is not None:
            merged[key] = value

    known = {"data_dir", "port", *_SELECTOR_KEYS}
    unknown = set(merged) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")

    try:
        coerced = {k: _coerce(k, v) for k, v in merged.items()}
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid config value: {exc}") from exc

    selector = SelectorConfig(**{k: v for k, v in coerced.items() if k in _SELECTOR_KEYS})
    selector.validate()
    config = CliConfig(
        data_dir=coerced.get("data_dir"),  # type: ignore[arg-type]
        port=coerced.get("port", 8000),  # type: ignore[arg-type]
        selector=selector,
    )
    if not 0 < config.port < 65536:
        raise ValueError(f"port {config.port} out of range")
    return config
