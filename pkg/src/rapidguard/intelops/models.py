"""Threat-intel domain types and the item status machine."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date


class IntelError(Exception):
    pass


class EmptyBody(IntelError):
    pass


class OutOfRange(IntelError):
    pass


class NotScored(IntelError):
    pass


class UnknownItem(IntelError):
    pass


class InvalidTransition(IntelError):
    def __init__(self, item_id: str, current: str, target: str):
        super().__init__(f"item {item_id}: cannot move {current} -> {target}")
        self.current = current
        self.target = target


class GenerationFailure(IntelError):
    pass


class EmptySection(IntelError):
    pass


class RevisionConflict(IntelError):
    pass


STATUSES = ("new", "queued", "in_review", "reported", "archived")

# Legal status transitions; anything else is rejected atomically.
TRANSITIONS = {
    ("new", "queued"),
    ("new", "archived"),
    ("queued", "in_review"),
    ("in_review", "reported"),
}

REPORT_SECTIONS = (
    "threat_summary",
    "technical_details",
    "potential_impact",
    "attack_example",
    "ease_of_implementation",
    "detection_mitigation",
)


@dataclass(frozen=True)
class TaxonomyNode:
    id: str
    name: str
    parent_id: str | None = None
    owasp_refs: tuple[str, ...] = ()
    mitre_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class PIR:
    """A prioritized intelligence target: a model/app or a TTP."""

    id: str
    kind: str  # model | ttp
    subject: str
    priority: float  # [0, 5]
    active_window: tuple[str, str] | None = None  # (start, end) ISO dates

    def __post_init__(self):
        if not 0.0 <= self.priority <= 5.0:
            raise OutOfRange(f"PIR {self.id}: priority {self.priority} outside [0, 5]")
        if self.kind not in ("model", "ttp"):
            raise ValueError(f"PIR {self.id}: kind must be model or ttp")
        if self.active_window is not None:
            start, end = self.active_window
            if date.fromisoformat(end) <= date.fromisoformat(start):
                raise ValueError(f"PIR {self.id}: window end must be after start")

    def is_active(self, on: date) -> bool:
        if self.active_window is None:
            return True
        start, end = self.active_window
        return date.fromisoformat(start) <= on <= date.fromisoformat(end)


@dataclass(frozen=True)
class EaseFactors:
    susceptibility: float  # [0, 5]
    signature_opportunity: bool
    data_available: bool

    def __post_init__(self):
        if not 0.0 <= self.susceptibility <= 5.0:
            raise OutOfRange(
                f"susceptibility {self.susceptibility} outside [0, 5]"
            )


@dataclass
class IntelItem:
    id: str
    title: str
    raw_text: str
    origin: str  # feed | adhoc | internal
    ingested_at: str  # ISO-8601 timestamp
    dedupe_key: str
    source_url: str | None = None
    source_label: str | None = None
    extracted_text: str | None = None
    extraction_failed: bool = False
    affected_models: list[str] = field(default_factory=list)
    ttps: list[str] = field(default_factory=list)
    reported_asr: float | None = None
    pir_score: float | None = None
    status: str = "new"
    ease: EaseFactors | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "raw_text": self.raw_text,
            "origin": self.origin,
            "ingested_at": self.ingested_at,
            "dedupe_key": self.dedupe_key,
            "source_url": self.source_url,
            "source_label": self.source_label,
            "extracted_text": self.extracted_text,
            "extraction_failed": self.extraction_failed,
            "affected_models": list(self.affected_models),
            "ttps": list(self.ttps),
            "reported_asr": self.reported_asr,
            "pir_score": self.pir_score,
            "status": self.status,
            "ease": None
            if self.ease is None
            else {
                "susceptibility": self.ease.susceptibility,
                "signature_opportunity": self.ease.signature_opportunity,
                "data_available": self.ease.data_available,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IntelItem":
        ease = data.get("ease")
        return cls(
            id=data["id"],
            title=data["title"],
            raw_text=data["raw_text"],
            origin=data["origin"],
            ingested_at=data["ingested_at"],
            dedupe_key=data["dedupe_key"],
            source_url=data.get("source_url"),
            source_label=data.get("source_label"),
            extracted_text=data.get("extracted_text"),
            extraction_failed=bool(data.get("extraction_failed")),
            affected_models=list(data.get("affected_models") or []),
            ttps=list(data.get("ttps") or []),
            reported_asr=data.get("reported_asr"),
            pir_score=data.get("pir_score"),
            status=data.get("status", "new"),
            ease=None if ease is None else EaseFactors(**ease),
        )


@dataclass(frozen=True)
class Duplicate:
    """Ingest outcome when the document collides with a stored item."""

    existing: IntelItem


@dataclass
class Report:
    item_id: str
    sections: dict[str, str]
    author: str  # generator | analyst
    revision: int
    created_at: str
    recommended_signature: str | None = None

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "sections": dict(self.sections),
            "author": self.author,
            "revision": self.revision,
            "created_at": self.created_at,
            "recommended_signature": self.recommended_signature,
        }
