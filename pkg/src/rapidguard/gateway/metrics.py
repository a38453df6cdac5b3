"""Counter registry with line-oriented text exposition."""

from __future__ import annotations

import threading


class Metrics:
    def __init__(self, prefix: str = "rapidguard"):
        self.prefix = prefix
        self._counters: dict[str, int] = {}
        self._lock = threading.Lock()

    def incr(self, name: str, n: int = 1) -> None:
        with self._lock:
            self._counters[name] = self._counters.get(name, 0) + n

    def get(self, name: str) -> int:
        return self._counters.get(name, 0)

    def render(self, extra: dict | None = None) -> str:
        """One `<prefix>_<name> <value>` line per counter/gauge."""
        with self._lock:
            merged = dict(self._counters)
        merged.update(extra or {})
        lines = [
            f"{self.prefix}_{name} {value}" for name, value in sorted(merged.items())
        ]
        return "\n".join(lines) + "\n"
