"""Versioned JSON registries: PIRs and source credibility.

Both are plain configuration files so that priorities can be reviewed
and updated without code changes. Credibility is a per-source constant
(arXiv below peer-reviewed venues, internal research highest), not
something computed per item.
"""

from __future__ import annotations

import json
from pathlib import Path

from .models import PIR


class PirRegistry:
    def __init__(self, pirs: list[PIR], floor: float = 0.0, version: int = 1):
        self.pirs = list(pirs)
        self.floor = floor
        self.version = version

    @classmethod
    def from_file(cls, path: str | Path) -> "PirRegistry":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        pirs = [
            PIR(
                id=entry["id"],
                kind=entry["kind"],
                subject=entry["subject"],
                priority=float(entry["priority"]),
                active_window=(
                    (entry["active_window"]["start"], entry["active_window"]["end"])
                    if entry.get("active_window")
                    else None
                ),
            )
            for entry in data.get("pirs", [])
        ]
        return cls(pirs, floor=float(data.get("floor", 0.0)), version=data.get("version", 1))

    def to_file(self, path: str | Path) -> None:
        payload = {
            "version": self.version,
            "floor": self.floor,
            "pirs": [
                {
                    "id": p.id,
                    "kind": p.kind,
                    "subject": p.subject,
                    "priority": p.priority,
                    "active_window": (
                        {"start": p.active_window[0], "end": p.active_window[1]}
                        if p.active_window
                        else None
                    ),
                }
                for p in self.pirs
            ],
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


DEFAULT_CREDIBILITY = {
    "arxiv": 2.0,
    "security_blog": 2.5,
    "vendor_advisory": 3.5,
    "peer_reviewed": 4.0,
    "internal_research": 5.0,
}


class CredibilityRegistry:
    def __init__(self, sources: dict[str, float] | None = None, default: float = 2.0):
        self.sources = dict(DEFAULT_CREDIBILITY if sources is None else sources)
        self.default = default

    @classmethod
    def from_file(cls, path: str | Path) -> "CredibilityRegistry":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            sources={k: float(v) for k, v in data.get("sources", {}).items()},
            default=float(data.get("default", 2.0)),
        )

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps({"default": self.default, "sources": self.sources}, indent=2)
            + "\n",
            encoding="utf-8",
        )

    def credibility(self, source_label: str | None) -> float:
        if source_label is None:
            return self.default
        return self.sources.get(source_label, self.default)
