"""Append-only audit log for admin mutations.

One JSONL entry per mutation: timestamp, actor, action, the epoch it
produced (when applicable), and a digest of the request payload so two
control paths (CLI, HTTP console) can be compared entry-for-entry.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from pathlib import Path
from typing import Callable

from ..storage import dumps


def payload_digest(payload) -> str:
    return hashlib.sha256(dumps(payload).encode("utf-8")).hexdigest()


class AuditLog:
    def __init__(self, path: str | Path | None = None, clock: Callable[[], float] = time.time):
        self.path = Path(path) if path is not None else None
        self.clock = clock
        self._lock = threading.Lock()
        self.entries: list[dict] = []
        if self.path is not None and self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                self.entries = [json.loads(line) for line in fh if line.strip()]

    def append(
        self,
        actor: str,
        action: str,
        payload,
        epoch: int | None = None,
        environment: str | None = None,
    ) -> dict:
        entry = {
            "ts": self.clock(),
            "actor": actor,
            "action": action,
            "payload_digest": payload_digest(payload),
            "epoch": epoch,
            "environment": environment,
        }
        with self._lock:
            self.entries.append(entry)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry) + "\n")
        return entry

    def comparable(self) -> list[dict]:
        """Entries stripped of actor and wall time, for cross-path
        equivalence checks."""
        return [
            {
                "action": e["action"],
                "payload_digest": e["payload_digest"],
                "epoch": e.get("epoch"),
                "environment": e.get("environment"),
            }
            for e in self.entries
        ]
