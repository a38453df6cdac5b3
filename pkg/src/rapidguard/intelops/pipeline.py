"""Threat-intel pipeline: ingestion, dedup, scoring, triage, reporting.

Raw documents arrive from feed drops, ad hoc analyst submissions, or
internal research. Each is deduplicated against everything already
stored (canonicalized content digest, plus exact URL), extracted
through the text-extractor interface, then scored against the PIR
registry and either queued for analyst review or archived.

Reports are produced by the text-generation interface; the default
generator is a deterministic template fill so the pipeline is fully
reproducible without any model dependency. All report revisions are
retained.
"""

from __future__ import annotations

import hashlib
import re
import time
from datetime import date, datetime, timezone
from typing import Callable, Protocol

from ..storage import Database, dumps
from ..ruleforge.model import Rule, StringPattern, StringRef
from ..ruleforge.parser import render_rule
from .models import (
    Duplicate,
    EaseFactors,
    EmptyBody,
    EmptySection,
    GenerationFailure,
    IntelItem,
    InvalidTransition,
    NotScored,
    REPORT_SECTIONS,
    Report,
    RevisionConflict,
    TRANSITIONS,
    UnknownItem,
)
from .registry import CredibilityRegistry, PirRegistry
from .scoring import compute_ease, score_pir

_WS = re.compile(r"\s+")

INSUFFICIENT_DETAIL = "INSUFFICIENT DETAIL"


def canonicalize(text: str) -> str:
    return _WS.sub(" ", text.strip().lower())


def dedupe_key(title: str, body: str) -> str:
    """256-bit digest of the canonicalized document content."""
    canonical = canonicalize(title) + "\n" + canonicalize(body)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class TextExtractor(Protocol):
    def extract(self, title: str, body: str) -> str: ...


class PassthroughExtractor:
    """Stand-in for the external article extractor: returns the body."""

    def extract(self, title: str, body: str) -> str:
        return body


class ReportGenerator(Protocol):
    def generate(self, item: IntelItem) -> dict[str, str]: ...


class TemplateReportGenerator:
    """Deterministic template fill over item fields."""

    def generate(self, item: IntelItem) -> dict[str, str]:
        text = item.extracted_text or ""
        summary_base = text[:200].strip() or "No extracted content available."
        if item.affected_models:
            models = ", ".join(item.affected_models)
            impact = f"Affected models: {models}."
        else:
            impact = "No affected models reported."
        if item.reported_asr is not None:
            impact += f" Reported attack success rate: {item.reported_asr}."
        if item.ttps:
            impact += f" Observed TTPs: {', '.join(item.ttps)}."
        if item.ease is not None:
            ease = (
                f"Susceptibility {item.ease.susceptibility}/5; "
                f"signature opportunity: {'yes' if item.ease.signature_opportunity else 'no'}; "
                f"reference data available: {'yes' if item.ease.data_available else 'no'}."
            )
        else:
            ease = "Not yet assessed."
        if item.ease is not None and item.ease.signature_opportunity:
            detection = (
                "Signature-based detection is appropriate; a draft rule "
                "is attached for analyst refinement."
            )
        else:
            detection = (
                "No immediate signature opportunity identified; monitor "
                "telemetry and evaluate model coverage."
            )
        return {
            "threat_summary": f"{item.title}. {summary_base}",
            "technical_details": text
            or "Extraction pending; raw source text retained for retry.",
            "potential_impact": impact,
            "attack_example": text[:300].strip() or INSUFFICIENT_DETAIL,
            "ease_of_implementation": ease,
            "detection_mitigation": detection,
        }


def draft_signature(item: IntelItem) -> str:
    """Render a starter rule from the item for the analyst to refine."""
    slug = re.sub(r"[^A-Za-z0-9_]+", "_", item.title).strip("_")[:40] or "intel_item"
    phrase = (item.extracted_text or item.title).strip()
    phrase = _WS.sub(" ", phrase)[:48].strip()
    rule = Rule(
        name=f"sig_{slug}".lower(),
        meta=tuple(
            sorted(
                {
                    "description": f"draft signature for {item.title[:60]}",
                    "category": item.ttps[0] if item.ttps else "unknown",
                    "severity": 3,
                    "created": item.ingested_at[:10],
                }.items()
            )
        ),
        strings=(StringPattern("$a", "text", phrase, nocase=True),),
        condition=StringRef("$a"),
    )
    return render_rule(rule)


_SCHEMA = """
CREATE TABLE IF NOT EXISTS intel_items (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    id TEXT UNIQUE NOT NULL,
    dedupe_key TEXT NOT NULL,
    source_url TEXT,
    status TEXT NOT NULL,
    pir_score REAL,
    ingested_at TEXT NOT NULL,
    payload TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_intel_dedupe ON intel_items(dedupe_key);
CREATE INDEX IF NOT EXISTS idx_intel_status ON intel_items(status);
CREATE TABLE IF NOT EXISTS intel_reports (
    item_id TEXT NOT NULL,
    revision INTEGER NOT NULL,
    author TEXT NOT NULL,
    created_at TEXT NOT NULL,
    sections TEXT NOT NULL,
    recommended_signature TEXT,
    PRIMARY KEY (item_id, revision)
);
"""


class IntelPipeline:
    def __init__(
        self,
        db: Database | None = None,
        extractor: TextExtractor | None = None,
        generator: ReportGenerator | None = None,
        clock: Callable[[], float] = time.time,
    ):
        self.db = db or Database()
        self.db.executescript(_SCHEMA)
        self.extractor = extractor or PassthroughExtractor()
        self.generator = generator or TemplateReportGenerator()
        self.clock = clock

    # --- ingestion --------------------------------------------------------

    def _now_iso(self) -> str:
        return datetime.fromtimestamp(self.clock(), tz=timezone.utc).isoformat()

    def ingest_item(self, raw: dict, origin: str | None = None) -> IntelItem | Duplicate:
        title = (raw.get("title") or "").strip()
        url = raw.get("url") or raw.get("source_url")
        body = (raw.get("body") or "").strip()
        if not title and not url:
            raise EmptyBody("document needs a title or a url")
        if not body:
            raise EmptyBody("document body is empty")
        key = dedupe_key(title, body)
        with self.db.lock:
            row = self.db.query_one(
                "SELECT payload FROM intel_items WHERE dedupe_key = ?", (key,)
            )
            if row is None and url:
                row = self.db.query_one(
                    "SELECT payload FROM intel_items WHERE source_url = ?", (url,)
                )
            if row is not None:
                return Duplicate(IntelItem.from_dict(_loads(row["payload"])))

            extracted: str | None
            failed = False
            try:
                extracted = self.extractor.extract(title, body)
            except Exception:
                extracted = None
                failed = True

            seq = self.db.query_one(
                "SELECT COALESCE(MAX(seq), 0) + 1 AS n FROM intel_items"
            )["n"]
            item = IntelItem(
                id=f"itm-{seq:06d}",
                title=title,
                raw_text=body,
                origin=origin or raw.get("origin") or "feed",
                ingested_at=self._now_iso(),
                dedupe_key=key,
                source_url=url,
                source_label=raw.get("source_label"),
                extracted_text=extracted,
                extraction_failed=failed,
                affected_models=list(raw.get("affected_models") or []),
                ttps=list(raw.get("ttps") or []),
                reported_asr=raw.get("reported_asr"),
            )
            if item.reported_asr is not None and not 0.0 <= item.reported_asr <= 1.0:
                raise EmptyBody(f"reported_asr {item.reported_asr} outside [0, 1]")
            self._insert(item)
            return item

    def _insert(self, item: IntelItem) -> None:
        self.db.execute(
            "INSERT INTO intel_items (id, dedupe_key, source_url, status, "
            "pir_score, ingested_at, payload) VALUES (?, ?, ?, ?, ?, ?, ?)",
            (
                item.id,
                item.dedupe_key,
                item.source_url,
                item.status,
                item.pir_score,
                item.ingested_at,
                dumps(item.to_dict()),
            ),
        )

    def _save(self, item: IntelItem) -> None:
        self.db.execute(
            "UPDATE intel_items SET status = ?, pir_score = ?, payload = ? WHERE id = ?",
            (item.status, item.pir_score, dumps(item.to_dict()), item.id),
        )

    def get_item(self, item_id: str) -> IntelItem:
        row = self.db.query_one(
            "SELECT payload FROM intel_items WHERE id = ?", (item_id,)
        )
        if row is None:
            raise UnknownItem(f"no intel item {item_id!r}")
        return IntelItem.from_dict(_loads(row["payload"]))

    def list_items(
        self, status: str | None = None, min_score: float | None = None
    ) -> list[IntelItem]:
        sql = "SELECT payload FROM intel_items"
        clauses, params = [], []
        if status:
            clauses.append("status = ?")
            params.append(status)
        if min_score is not None:
            clauses.append("pir_score >= ?")
            params.append(min_score)
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY pir_score DESC, ingested_at ASC"
        return [
            IntelItem.from_dict(_loads(r["payload"]))
            for r in self.db.query(sql, tuple(params))
        ]

    def queue(self) -> list[IntelItem]:
        """Analyst queue ordered by score (desc) then ingest time (asc)."""
        return self.list_items(status="queued")

    # --- state machine ------------------------------------------------------

    def _transition(self, item: IntelItem, target: str) -> IntelItem:
        if (item.status, target) not in TRANSITIONS:
            raise InvalidTransition(item.id, item.status, target)
        # compare-and-set so concurrent transitions cannot race
        cursor = self.db.execute(
            "UPDATE intel_items SET status = ? WHERE id = ? AND status = ?",
            (target, item.id, item.status),
        )
        if cursor.rowcount != 1:
            current = self.get_item(item.id).status
            raise InvalidTransition(item.id, current, target)
        item.status = target
        self._save(item)
        return item

    def set_ease(self, item_id: str, factors: EaseFactors) -> IntelItem:
        item = self.get_item(item_id)
        item.ease = factors
        self._save(item)
        return item

    def update_item(self, item_id: str, fields: dict) -> IntelItem:
        """PATCH semantics: replace the supplied editable fields."""
        item = self.get_item(item_id)
        target_status = fields.pop("status", None)
        for key in ("affected_models", "ttps"):
            if key in fields:
                setattr(item, key, list(fields[key]))
        if "reported_asr" in fields:
            item.reported_asr = fields["reported_asr"]
        if "source_label" in fields:
            item.source_label = fields["source_label"]
        if "ease" in fields and fields["ease"] is not None:
            item.ease = EaseFactors(**fields["ease"])
        self._save(item)
        if target_status is not None and target_status != item.status:
            item = self._transition(item, target_status)
        return item

    def begin_review(self, item_id: str) -> IntelItem:
        return self._transition(self.get_item(item_id), "in_review")

    # --- scoring and triage -------------------------------------------------

    def score_item(
        self,
        item_id: str,
        pir_registry: PirRegistry,
        credibility: CredibilityRegistry,
        on_date: date | None = None,
    ) -> float:
        item = self.get_item(item_id)
        s = credibility.credibility(item.source_label)
        e = compute_ease(item.ease) if item.ease is not None else 0.0
        score = score_pir(
            item,
            pir_registry.pirs,
            s,
            e,
            on_date=on_date,
            floor=pir_registry.floor,
        )
        self._save(item)
        return score

    def triage(self, item_id: str, threshold: float) -> str:
        item = self.get_item(item_id)
        if item.pir_score is None:
            raise NotScored(f"item {item_id} has no PIR score yet")
        target = "queued" if item.pir_score >= threshold else "archived"
        self._transition(item, target)
        return target

    # --- reporting ------------------------------------------------------------

    def _latest_revision(self, item_id: str) -> int:
        row = self.db.query_one(
            "SELECT COALESCE(MAX(revision), 0) AS r FROM intel_reports WHERE item_id = ?",
            (item_id,),
        )
        return row["r"]

    def generate_report(self, item_id: str) -> Report:
        item = self.get_item(item_id)
        if item.status != "in_review":
            raise InvalidTransition(item_id, item.status, "in_review")
        try:
            sections = self.generator.generate(item)
        except Exception as exc:  # item stays in_review for retry
            raise GenerationFailure(f"report generation failed: {exc}") from exc
        missing = [s for s in REPORT_SECTIONS if not sections.get(s)]
        if missing:
            raise GenerationFailure(f"generator omitted sections: {missing}")
        signature = None
        if item.ease is not None and item.ease.signature_opportunity:
            signature = draft_signature(item)
        report = Report(
            item_id=item_id,
            sections={s: sections[s] for s in REPORT_SECTIONS},
            author="generator",
            revision=self._latest_revision(item_id) + 1,
            created_at=self._now_iso(),
            recommended_signature=signature,
        )
        self._store_report(report)
        return report

    def finalize_report(
        self,
        item_id: str,
        analyst_edits: dict[str, str],
        base_revision: int | None = None,
    ) -> Report:
        latest = self.latest_report(item_id)
        if latest is None:
            raise UnknownItem(f"item {item_id} has no report to finalize")
        if base_revision is not None and base_revision != latest.revision:
            raise RevisionConflict(
                f"item {item_id}: finalize based on revision {base_revision} "
                f"but latest is {latest.revision}"
            )
        unknown = set(analyst_edits) - set(REPORT_SECTIONS)
        if unknown:
            raise EmptySection(f"unknown sections: {sorted(unknown)}")
        sections = dict(latest.sections)
        sections.update(analyst_edits)
        blank = [s for s in REPORT_SECTIONS if not sections.get(s, "").strip()]
        if blank:
            raise EmptySection(f"sections must be non-empty: {blank}")
        report = Report(
            item_id=item_id,
            sections=sections,
            author="analyst",
            revision=latest.revision + 1,
            created_at=self._now_iso(),
            recommended_signature=latest.recommended_signature,
        )
        self._store_report(report)
        item = self.get_item(item_id)
        if item.status == "in_review":
            self._transition(item, "reported")
        return report

    def _store_report(self, report: Report) -> None:
        self.db.execute(
            "INSERT INTO intel_reports (item_id, revision, author, created_at, "
            "sections, recommended_signature) VALUES (?, ?, ?, ?, ?, ?)",
            (
                report.item_id,
                report.revision,
                report.author,
                report.created_at,
                dumps(report.sections),
                report.recommended_signature,
            ),
        )

    def reports(self, item_id: str) -> list[Report]:
        rows = self.db.query(
            "SELECT * FROM intel_reports WHERE item_id = ? ORDER BY revision",
            (item_id,),
        )
        return [
            Report(
                item_id=r["item_id"],
                sections=_loads(r["sections"]),
                author=r["author"],
                revision=r["revision"],
                created_at=r["created_at"],
                recommended_signature=r["recommended_signature"],
            )
            for r in rows
        ]

    def latest_report(self, item_id: str) -> Report | None:
        all_reports = self.reports(item_id)
        return all_reports[-1] if all_reports else None


def _loads(payload: str) -> dict:
    import json

    return json.loads(payload)
