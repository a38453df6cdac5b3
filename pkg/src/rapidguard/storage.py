"""Embedded transactional storage shared by the platform stores.

A single SQLite database holds every module's tables (prompts,
observations, intel items, versions, deployments, telemetry, ...).
Stores create their own tables on attach and serialize writes through
the shared lock; compiled artifacts (rule packages) live as JSON
manifests next to the database rather than inside it.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from pathlib import Path


class Database:
    """One SQLite connection plus the write lock all stores share."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
        self.conn = sqlite3.connect(
            str(self.path) if self.path is not None else ":memory:",
            check_same_thread=False,
        )
        self.conn.row_factory = sqlite3.Row
        self.lock = threading.RLock()
        with self.lock:
            if self.path is not None:
                self.conn.execute("PRAGMA journal_mode=WAL")
            self.conn.execute("PRAGMA synchronous=NORMAL")

    def executescript(self, script: str) -> None:
        with self.lock, self.conn:
            self.conn.executescript(script)

    def execute(self, sql: str, params: tuple = ()) -> sqlite3.Cursor:
        with self.lock, self.conn:
            return self.conn.execute(sql, params)

    def query(self, sql: str, params: tuple = ()) -> list[sqlite3.Row]:
        with self.lock:
            return self.conn.execute(sql, params).fetchall()

    def query_one(self, sql: str, params: tuple = ()) -> sqlite3.Row | None:
        with self.lock:
            return self.conn.execute(sql, params).fetchone()

    def close(self) -> None:
        with self.lock:
            self.conn.close()


def dumps(obj) -> str:
    """Canonical JSON for digests and stored payloads."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
