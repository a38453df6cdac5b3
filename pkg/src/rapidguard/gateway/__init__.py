"""HTTP service and CLI composing the platform end to end."""

from .config import ConfigError, ServiceConfig, load_config
from .metrics import Metrics
from .platform import DRILL_ATTACK_PROMPT, Platform, run_drill

__all__ = [
    "ConfigError",
    "DRILL_ATTACK_PROMPT",
    "Metrics",
    "Platform",
    "ServiceConfig",
    "load_config",
    "run_drill",
]
