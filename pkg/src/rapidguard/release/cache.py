"""Bounded LRU cache for model component scores.

Keys are (model_id, model_version, text digest); because model stubs
are immutable and pure, a cached score never goes stale. Eviction only
costs a recompute. The cache can persist to a JSON file so restarts
keep their warm state.
"""

from __future__ import annotations

import json
import threading
from collections import OrderedDict
from pathlib import Path


class ScoreCache:
    def __init__(self, maxsize: int = 100_000, path: str | Path | None = None):
        self.maxsize = maxsize
        self.path = Path(path) if path is not None else None
        self._data: OrderedDict[str, float] = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.enabled = True
        if self.path is not None and self.path.exists():
            self._data.update(json.loads(self.path.read_text(encoding="utf-8")))

    @staticmethod
    def key(model_id: str, model_version: int, text_digest: str) -> str:
        return f"{model_id}@{model_version}:{text_digest}"

    def get(self, key: str) -> float | None:
        if not self.enabled:
            return None
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                self.hits += 1
                return self._data[key]
            self.misses += 1
            return None

    def put(self, key: str, score: float) -> None:
        if not self.enabled:
            return
        with self._lock:
            self._data[key] = score
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)

    def save(self) -> None:
        if self.path is None:
            return
        with self._lock:
            self.path.write_text(json.dumps(dict(self._data)), encoding="utf-8")

    def __len__(self) -> int:
        return len(self._data)
