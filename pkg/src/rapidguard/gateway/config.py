"""Service configuration: one JSON file plus RAPIDGUARD_* overrides.

Invalid configuration is rejected at startup with the offending field
named, never silently defaulted.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..release.deploy import GateThresholds


class ConfigError(Exception):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field {field_name!r}: {message}")
        self.field = field_name


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8080"
    data_dir: str = "./data"
    admin_token: str = "dev-admin-token"
    pir_registry: str | None = None
    credibility_registry: str | None = None
    triage_threshold: float = 2.5
    gate: GateThresholds = field(default_factory=GateThresholds)
    shadow_min_samples: int = 1000
    fp_cap: int = 0
    perf_budget_p95_ms: float = 50.0
    shadow_queue_size: int = 1024
    cache_maxsize: int = 100_000
    cache_persist: bool = False
    redactions: list = field(default_factory=list)  # [pattern, replacement] pairs

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])


_ENV_PREFIX = "RAPIDGUARD_"

_ENV_FIELDS = {
    "LISTEN": ("listen", str),
    "DATA_DIR": ("data_dir", str),
    "ADMIN_TOKEN": ("admin_token", str),
    "PIR_REGISTRY": ("pir_registry", str),
    "CREDIBILITY_REGISTRY": ("credibility_registry", str),
    "TRIAGE_THRESHOLD": ("triage_threshold", float),
    "SHADOW_MIN_SAMPLES": ("shadow_min_samples", int),
    "FP_CAP": ("fp_cap", int),
    "CACHE_PERSIST": ("cache_persist", lambda v: v.strip().lower() in ("1", "true", "yes", "on")),
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"not valid JSON: {exc}") from exc

    config = ServiceConfig()
    known = set(ServiceConfig.__dataclass_fields__)
    for key, value in raw.items():
        if key == "gate":
            if not isinstance(value, dict):
                raise ConfigError("gate", "must be an object")
            try:
                config.gate = GateThresholds(**value)
            except TypeError as exc:
                raise ConfigError("gate", str(exc)) from exc
        elif key in known:
            setattr(config, key, value)
        else:
            raise ConfigError(key, "unknown configuration key")

    for suffix, (attr, cast) in _ENV_FIELDS.items():
        value = env.get(_ENV_PREFIX + suffix)
        if value is not None:
            try:
                setattr(config, attr, cast(value))
            except (TypeError, ValueError) as exc:
                raise ConfigError(attr, f"bad environment override: {exc}") from exc

    _validate(config)
    return config


def _validate(config: ServiceConfig) -> None:
    if ":" not in config.listen:
        raise ConfigError("listen", "must be host:port")
    try:
        port = config.port
    except ValueError:
        raise ConfigError("listen", "port must be an integer") from None
    if not 0 < port < 65536:
        raise ConfigError("listen", f"port {port} out of range")
    if not config.admin_token:
        raise ConfigError("admin_token", "must be non-empty")
    if not isinstance(config.triage_threshold, (int, float)) or not (
        0.0 <= config.triage_threshold <= 5.0
    ):
        raise ConfigError("triage_threshold", "must be a number in [0, 5]")
    if config.shadow_min_samples < 1:
        raise ConfigError("shadow_min_samples", "must be >= 1")
    if config.fp_cap < 0:
        raise ConfigError("fp_cap", "must be >= 0")
    for entry in config.redactions:
        if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
            raise ConfigError("redactions", "entries must be [pattern, replacement] pairs")
