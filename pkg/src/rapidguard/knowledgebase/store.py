"""The knowledge table: one row per prompt, everything known about it.

Prompts are content-addressed (the id is the SHA-256 of the stored
text) and append-only; labels arrive as observations in an append-only
log and the golden label is recomputed from scratch on every append.
Telemetry verdicts from the serving path land here too, which is what
drift monitoring, review sampling, and offline evaluation read.

An optional redaction pass (regex replacements) runs before storage so
raw customer text can be scrubbed; it applies before hashing, so the
prompt id always matches the stored text.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
from datetime import datetime, timezone
from typing import Callable, Iterable, Sequence

from ..storage import Database, dumps
from .consensus import automated_consensus, compute_golden, human_consensus
from .models import (
    ConfidenceOutOfRange,
    DriftReport,
    EmptyText,
    GoldenLabel,
    InsufficientData,
    LABELS,
    LabelObservation,
    PromptRecord,
    UnknownPrompt,
)
from .tasks import TaskQueue

_SCHEMA = """
CREATE TABLE IF NOT EXISTS prompts (
    prompt_id TEXT PRIMARY KEY,
    text TEXT NOT NULL,
    source TEXT NOT NULL,
    language TEXT,
    created_at TEXT NOT NULL,
    provenance TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS observations (
    obs_id INTEGER PRIMARY KEY AUTOINCREMENT,
    prompt_id TEXT NOT NULL,
    labeler_kind TEXT NOT NULL,
    labeler_name TEXT,
    label TEXT NOT NULL,
    category TEXT,
    confidence REAL NOT NULL,
    observed_at TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_obs_prompt ON observations(prompt_id);
CREATE TABLE IF NOT EXISTS goldens (
    prompt_id TEXT PRIMARY KEY,
    label TEXT NOT NULL,
    category TEXT,
    tier INTEGER NOT NULL,
    computed_at TEXT NOT NULL,
    inputs TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS corpora (
    corpus_id TEXT NOT NULL,
    prompt_id TEXT NOT NULL,
    PRIMARY KEY (corpus_id, prompt_id)
);
CREATE TABLE IF NOT EXISTS telemetry (
    row_id INTEGER PRIMARY KEY AUTOINCREMENT,
    request_id TEXT NOT NULL,
    customer_id TEXT,
    prompt_id TEXT NOT NULL,
    version_id TEXT NOT NULL,
    flagged INTEGER NOT NULL,
    evidence TEXT NOT NULL,
    served INTEGER NOT NULL,
    latency_ms REAL,
    epoch INTEGER,
    environment TEXT,
    ts REAL NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_tel_prompt ON telemetry(prompt_id);
CREATE INDEX IF NOT EXISTS idx_tel_version ON telemetry(version_id);
CREATE TABLE IF NOT EXISTS reviewed (
    prompt_id TEXT PRIMARY KEY,
    reviewed_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS high_precision_signatures (
    package_key TEXT PRIMARY KEY
);
"""


def prompt_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class KnowledgeBase:
    def __init__(
        self,
        db: Database | None = None,
        clock: Callable[[], float] = time.time,
        redactions: Sequence[tuple[str, str]] = (),
    ):
        self.db = db or Database()
        self.db.executescript(_SCHEMA)
        self.clock = clock
        self.redactions = [(re.compile(p), r) for p, r in redactions]
        self.tasks = TaskQueue(self.db, clock=clock, prompt_exists=self._exists)

    def _now_iso(self) -> str:
        return datetime.fromtimestamp(self.clock(), tz=timezone.utc).isoformat()

    def _exists(self, prompt_id: str) -> bool:
        return (
            self.db.query_one(
                "SELECT 1 FROM prompts WHERE prompt_id = ?", (prompt_id,)
            )
            is not None
        )

    # --- prompts ------------------------------------------------------------

    def redact(self, text: str) -> str:
        for pattern, replacement in self.redactions:
            text = pattern.sub(replacement, text)
        return text

    def upsert_prompt(
        self,
        text: str,
        source: str,
        provenance: dict | None = None,
        language: str | None = None,
    ) -> PromptRecord:
        if not text:
            raise EmptyText("prompt text must be non-empty")
        text = self.redact(text)
        prompt_id = prompt_digest(text)
        with self.db.lock:
            row = self.db.query_one(
                "SELECT * FROM prompts WHERE prompt_id = ?", (prompt_id,)
            )
            if row is not None:
                merged = json.loads(row["provenance"])
                merged.update(provenance or {})
                self.db.execute(
                    "UPDATE prompts SET provenance = ?, language = COALESCE(?, language) "
                    "WHERE prompt_id = ?",
                    (dumps(merged), language, prompt_id),
                )
                return PromptRecord(
                    prompt_id=prompt_id,
                    text=row["text"],
                    source=row["source"],
                    language=language or row["language"],
                    created_at=row["created_at"],
                    provenance=merged,
                )
            record = PromptRecord(
                prompt_id=prompt_id,
                text=text,
                source=source,
                language=language,
                created_at=self._now_iso(),
                provenance=dict(provenance or {}),
            )
            self.db.execute(
                "INSERT INTO prompts (prompt_id, text, source, language, created_at, provenance) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (
                    record.prompt_id,
                    record.text,
                    record.source,
                    record.language,
                    record.created_at,
                    dumps(record.provenance),
                ),
            )
            return record

    def get_prompt(self, prompt_id: str) -> PromptRecord:
        row = self.db.query_one(
            "SELECT * FROM prompts WHERE prompt_id = ?", (prompt_id,)
        )
        if row is None:
            raise UnknownPrompt(f"no prompt {prompt_id!r}")
        return PromptRecord(
            prompt_id=row["prompt_id"],
            text=row["text"],
            source=row["source"],
            language=row["language"],
            created_at=row["created_at"],
            provenance=json.loads(row["provenance"]),
        )

    def prompt_count(self) -> int:
        return self.db.query_one("SELECT COUNT(*) AS n FROM prompts")["n"]

    def all_prompt_ids(self) -> list[str]:
        return [
            r["prompt_id"]
            for r in self.db.query("SELECT prompt_id FROM prompts ORDER BY created_at, prompt_id")
        ]

    # --- observations and goldens --------------------------------------------

    def record_observation(self, obs: LabelObservation) -> LabelObservation:
        if not 0.0 <= obs.confidence <= 1.0:
            raise ConfidenceOutOfRange(f"confidence {obs.confidence} outside [0, 1]")
        if obs.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {obs.label!r}")
        with self.db.lock:
            if not self._exists(obs.prompt_id):
                raise UnknownPrompt(f"no prompt {obs.prompt_id!r}")
            cursor = self.db.execute(
                "INSERT INTO observations (prompt_id, labeler_kind, labeler_name, "
                "label, category, confidence, observed_at) VALUES (?, ?, ?, ?, ?, ?, ?)",
                (
                    obs.prompt_id,
                    obs.labeler_kind,
                    obs.labeler_name,
                    obs.label,
                    obs.category,
                    obs.confidence,
                    obs.observed_at or self._now_iso(),
                ),
            )
            stored = LabelObservation(
                prompt_id=obs.prompt_id,
                labeler_kind=obs.labeler_kind,
                labeler_name=obs.labeler_name,
                label=obs.label,
                category=obs.category,
                confidence=obs.confidence,
                observed_at=obs.observed_at or self._now_iso(),
                obs_id=cursor.lastrowid,
            )
            if obs.labeler_kind == "human":
                self.mark_reviewed([obs.prompt_id])
            self._recompute_golden(obs.prompt_id)
            return stored

    def observations(self, prompt_id: str) -> list[LabelObservation]:
        rows = self.db.query(
            "SELECT * FROM observations WHERE prompt_id = ? ORDER BY obs_id",
            (prompt_id,),
        )
        return [
            LabelObservation(
                prompt_id=r["prompt_id"],
                labeler_kind=r["labeler_kind"],
                labeler_name=r["labeler_name"],
                label=r["label"],
                category=r["category"],
                confidence=r["confidence"],
                observed_at=r["observed_at"],
                obs_id=r["obs_id"],
            )
            for r in rows
        ]

    def high_precision_signatures(self) -> frozenset[str]:
        return frozenset(
            r["package_key"]
            for r in self.db.query("SELECT package_key FROM high_precision_signatures")
        )

    def mark_high_precision(self, package_id: str, version: int) -> None:
        """Allow a validated zero-FP package to cast tier-3 votes."""
        self.db.execute(
            "INSERT OR IGNORE INTO high_precision_signatures (package_key) VALUES (?)",
            (f"{package_id}@{version}",),
        )

    def _recompute_golden(self, prompt_id: str) -> GoldenLabel:
        golden = compute_golden(
            prompt_id,
            self.observations(prompt_id),
            self.high_precision_signatures(),
            computed_at=self._now_iso(),
        )
        self.db.execute(
            "INSERT INTO goldens (prompt_id, label, category, tier, computed_at, inputs) "
            "VALUES (?, ?, ?, ?, ?, ?) "
            "ON CONFLICT(prompt_id) DO UPDATE SET label = excluded.label, "
            "category = excluded.category, tier = excluded.tier, "
            "computed_at = excluded.computed_at, inputs = excluded.inputs",
            (
                golden.prompt_id,
                golden.label,
                golden.category,
                golden.tier,
                golden.computed_at,
                dumps(list(golden.inputs)),
            ),
        )
        return golden

    def golden_label(self, prompt_id: str) -> GoldenLabel:
        if not self._exists(prompt_id):
            raise UnknownPrompt(f"no prompt {prompt_id!r}")
        row = self.db.query_one(
            "SELECT * FROM goldens WHERE prompt_id = ?", (prompt_id,)
        )
        if row is None:
            return self._recompute_golden(prompt_id)
        return GoldenLabel(
            prompt_id=row["prompt_id"],
            label=row["label"],
            category=row["category"],
            tier=row["tier"],
            computed_at=row["computed_at"],
            inputs=tuple(json.loads(row["inputs"])),
        )

    # --- corpora --------------------------------------------------------------

    def add_to_corpus(self, corpus_id: str, prompt_id: str) -> None:
        if not self._exists(prompt_id):
            raise UnknownPrompt(f"no prompt {prompt_id!r}")
        self.db.execute(
            "INSERT OR IGNORE INTO corpora (corpus_id, prompt_id) VALUES (?, ?)",
            (corpus_id, prompt_id),
        )

    def import_corpus(self, corpus_id: str, entries: Iterable[dict]) -> int:
        """Corpus ingestion: {text, source?, label?, category?, provenance?}
        per entry; a label becomes a source-dataset observation."""
        count = 0
        for entry in entries:
            record = self.upsert_prompt(
                entry["text"],
                entry.get("source", "public_dataset"),
                provenance=entry.get("provenance"),
            )
            self.add_to_corpus(corpus_id, record.prompt_id)
            label = entry.get("label")
            if label:
                self.record_observation(
                    LabelObservation(
                        prompt_id=record.prompt_id,
                        labeler_kind="source_dataset",
                        label=label,
                        category=entry.get("category"),
                        confidence=1.0,
                        observed_at=self._now_iso(),
                    )
                )
            count += 1
        return count

    def corpus_prompts(self, corpus_id: str) -> list[PromptRecord]:
        rows = self.db.query(
            "SELECT p.* FROM corpora c JOIN prompts p ON p.prompt_id = c.prompt_id "
            "WHERE c.corpus_id = ? ORDER BY p.prompt_id",
            (corpus_id,),
        )
        return [
            PromptRecord(
                prompt_id=r["prompt_id"],
                text=r["text"],
                source=r["source"],
                language=r["language"],
                created_at=r["created_at"],
                provenance=json.loads(r["provenance"]),
            )
            for r in rows
        ]

    # --- telemetry --------------------------------------------------------------

    def record_telemetry(self, verdict: dict) -> None:
        self.db.execute(
            "INSERT INTO telemetry (request_id, customer_id, prompt_id, version_id, "
            "flagged, evidence, served, latency_ms, epoch, environment, ts) "
            "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
            (
                verdict["request_id"],
                verdict.get("customer_id"),
                verdict["prompt_id"],
                verdict["version_id"],
                int(verdict["flagged"]),
                verdict["evidence"]
                if isinstance(verdict["evidence"], str)
                else dumps(verdict["evidence"]),
                int(verdict["served"]),
                verdict.get("latency_ms"),
                verdict.get("epoch"),
                verdict.get("environment"),
                verdict.get("ts", self.clock()),
            ),
        )

    def telemetry_rows(
        self,
        version_id: str | None = None,
        served: bool | None = None,
        prompt_id: str | None = None,
    ) -> list[dict]:
        sql = "SELECT * FROM telemetry"
        clauses, params = [], []
        if version_id is not None:
            clauses.append("version_id = ?")
            params.append(version_id)
        if served is not None:
            clauses.append("served = ?")
            params.append(int(served))
        if prompt_id is not None:
            clauses.append("prompt_id = ?")
            params.append(prompt_id)
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY row_id"
        return [dict(r) for r in self.db.query(sql, tuple(params))]

    def telemetry_count(self, request_id: str | None = None) -> int:
        if request_id is None:
            return self.db.query_one("SELECT COUNT(*) AS n FROM telemetry")["n"]
        return self.db.query_one(
            "SELECT COUNT(*) AS n FROM telemetry WHERE request_id = ?", (request_id,)
        )["n"]

    # --- review bookkeeping -------------------------------------------------------

    def mark_reviewed(self, prompt_ids: Iterable[str]) -> None:
        now = self._now_iso()
        for pid in prompt_ids:
            self.db.execute(
                "INSERT OR IGNORE INTO reviewed (prompt_id, reviewed_at) VALUES (?, ?)",
                (pid, now),
            )

    def reviewed_ids(self) -> list[str]:
        return [r["prompt_id"] for r in self.db.query("SELECT prompt_id FROM reviewed")]

    # --- label drift ----------------------------------------------------------------

    def label_drift(
        self,
        window: Sequence[str] | None = None,
        min_n: int = 10,
        threshold: float = 0.05,
    ) -> DriftReport:
        """Disagreement between automated and human consensus over the
        window (default: every doubly-labeled prompt)."""
        candidates = list(window) if window is not None else self.all_prompt_ids()
        high_precision = self.high_precision_signatures()
        pairs: list[tuple[str, str, str]] = []
        for pid in candidates:
            obs = self.observations(pid)
            human = human_consensus(obs)
            automated = automated_consensus(obs, high_precision)
            if human is not None and automated is not None:
                pairs.append((pid, human, automated))
        if len(pairs) < min_n:
            raise InsufficientData(
                f"need at least {min_n} doubly-labeled prompts, have {len(pairs)}"
            )
        disagreements = tuple(pid for pid, h, a in pairs if h != a)
        drift = len(disagreements) / len(pairs)
        return DriftReport(
            window_size=len(pairs),
            disagreements=disagreements,
            drift=drift,
            threshold=threshold,
            alert=drift > threshold,
        )
