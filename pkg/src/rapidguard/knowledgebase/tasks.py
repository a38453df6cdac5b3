"""Enrichment task queue: lease-based, at-least-once, priority-ordered.

Workers pull the highest-priority pending tasks and hold a lease; a
crashed worker's tasks return to pending when the lease expires, and a
stale worker completing after expiry gets LeaseExpired and its result
is discarded (the lease token guards against that race). A task fails
permanently once it has been delivered more than max_retries times.
"""

from __future__ import annotations

import json
import time
import uuid
from typing import Callable

from ..storage import Database, dumps
from .models import EnrichmentTask, LeaseExpired, UnknownPrompt, UnknownTask

_SCHEMA = """
CREATE TABLE IF NOT EXISTS tasks (
    task_id INTEGER PRIMARY KEY AUTOINCREMENT,
    prompt_id TEXT NOT NULL,
    kind TEXT NOT NULL,
    params TEXT NOT NULL,
    priority REAL NOT NULL,
    state TEXT NOT NULL,
    attempts INTEGER NOT NULL DEFAULT 0,
    lease_token TEXT,
    lease_expires REAL,
    result TEXT,
    created_at REAL NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_tasks_state ON tasks(state, priority);
"""


def _to_task(row) -> EnrichmentTask:
    return EnrichmentTask(
        task_id=row["task_id"],
        prompt_id=row["prompt_id"],
        kind=row["kind"],
        params=json.loads(row["params"]),
        priority=row["priority"],
        state=row["state"],
        attempts=row["attempts"],
        lease_token=row["lease_token"],
        lease_expires=row["lease_expires"],
        result=json.loads(row["result"]) if row["result"] else None,
    )


class TaskQueue:
    def __init__(
        self,
        db: Database,
        clock: Callable[[], float] = time.time,
        prompt_exists: Callable[[str], bool] | None = None,
        lease_seconds: float = 60.0,
        max_retries: int = 3,
    ):
        self.db = db
        self.db.executescript(_SCHEMA)
        self.clock = clock
        self.prompt_exists = prompt_exists or (lambda _pid: True)
        self.lease_seconds = lease_seconds
        self.max_retries = max_retries

    def enqueue(
        self,
        prompt_id: str,
        kind: str,
        priority: float,
        params: dict | None = None,
    ) -> EnrichmentTask:
        """Deduplicated on (prompt_id, kind, params) among non-failed
        tasks; re-enqueueing a pending duplicate refreshes its priority."""
        params = params or {}
        params_json = dumps(params)
        with self.db.lock:
            if not self.prompt_exists(prompt_id):
                raise UnknownPrompt(f"no prompt {prompt_id!r}")
            existing = self.db.query_one(
                "SELECT * FROM tasks WHERE prompt_id = ? AND kind = ? AND params = ? "
                "AND state != 'failed'",
                (prompt_id, kind, params_json),
            )
            if existing is not None:
                if existing["state"] == "pending" and existing["priority"] != priority:
                    self.db.execute(
                        "UPDATE tasks SET priority = ? WHERE task_id = ?",
                        (priority, existing["task_id"]),
                    )
                    return self.get(existing["task_id"])
                return _to_task(existing)
            cursor = self.db.execute(
                "INSERT INTO tasks (prompt_id, kind, params, priority, state, "
                "attempts, created_at) VALUES (?, ?, ?, ?, 'pending', 0, ?)",
                (prompt_id, kind, params_json, priority, self.clock()),
            )
            return self.get(cursor.lastrowid)

    def get(self, task_id: int) -> EnrichmentTask:
        row = self.db.query_one("SELECT * FROM tasks WHERE task_id = ?", (task_id,))
        if row is None:
            raise UnknownTask(f"no task {task_id}")
        return _to_task(row)

    def next_batch(self, n: int) -> list[EnrichmentTask]:
        """Lease up to n deliverable tasks, highest priority first.
        Deliverable: pending, or running past its lease expiry."""
        now = self.clock()
        leased: list[EnrichmentTask] = []
        with self.db.lock:
            rows = self.db.query(
                "SELECT * FROM tasks WHERE state = 'pending' "
                "OR (state = 'running' AND lease_expires < ?) "
                "ORDER BY priority DESC, task_id ASC LIMIT ?",
                (now, n),
            )
            for row in rows:
                attempts = row["attempts"] + 1
                if attempts > self.max_retries:
                    self.db.execute(
                        "UPDATE tasks SET state = 'failed', lease_token = NULL, "
                        "lease_expires = NULL WHERE task_id = ?",
                        (row["task_id"],),
                    )
                    continue
                token = uuid.uuid4().hex
                self.db.execute(
                    "UPDATE tasks SET state = 'running', attempts = ?, "
                    "lease_token = ?, lease_expires = ? WHERE task_id = ?",
                    (attempts, token, now + self.lease_seconds, row["task_id"]),
                )
                leased.append(self.get(row["task_id"]))
        return leased

    def complete(
        self,
        task_id: int,
        result: dict | None = None,
        failure: str | None = None,
        lease_token: str | None = None,
    ) -> EnrichmentTask:
        now = self.clock()
        with self.db.lock:
            task = self.get(task_id)
            if task.state != "running":
                raise LeaseExpired(
                    f"task {task_id} is {task.state}, not running; result discarded"
                )
            if task.lease_expires is not None and task.lease_expires < now:
                raise LeaseExpired(f"task {task_id} lease expired; result discarded")
            if lease_token is not None and lease_token != task.lease_token:
                raise LeaseExpired(f"task {task_id} lease token mismatch")
            if failure is not None:
                if task.attempts >= self.max_retries:
                    state = "failed"
                else:
                    state = "pending"
                self.db.execute(
                    "UPDATE tasks SET state = ?, lease_token = NULL, lease_expires = NULL, "
                    "result = ? WHERE task_id = ?",
                    (state, dumps({"error": failure}), task_id),
                )
            else:
                self.db.execute(
                    "UPDATE tasks SET state = 'done', lease_token = NULL, "
                    "lease_expires = NULL, result = ? WHERE task_id = ?",
                    (dumps(result or {}), task_id),
                )
            return self.get(task_id)

    def depth(self) -> int:
        """Deliverable backlog: pending plus expired-running."""
        now = self.clock()
        return self.db.query_one(
            "SELECT COUNT(*) AS n FROM tasks WHERE state = 'pending' "
            "OR (state = 'running' AND lease_expires < ?)",
            (now,),
        )["n"]

    def counts_by_state(self) -> dict[str, int]:
        rows = self.db.query("SELECT state, COUNT(*) AS n FROM tasks GROUP BY state")
        return {r["state"]: r["n"] for r in rows}
