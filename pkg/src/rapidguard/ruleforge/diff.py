"""Delta inspection between two package versions.

Reports rule-level changes (by name and per-rule fingerprint) and, for
a supplied prompt corpus, exactly which prompts change verdict between
the old and the new package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .package import RulePackage
from .scanner import scan_text


@dataclass
class DeltaReport:
    old_fingerprint: str
    new_fingerprint: str
    added: tuple[str, ...]
    removed: tuple[str, ...]
    modified: tuple[str, ...]  # same name, different rule fingerprint
    none_to_match: tuple[int, ...]  # corpus indices
    match_to_none: tuple[int, ...]
    same_count: int

    @property
    def none_to_match_count(self) -> int:
        return len(self.none_to_match)

    @property
    def match_to_none_count(self) -> int:
        return len(self.match_to_none)

    def to_dict(self) -> dict:
        return {
            "old_fingerprint": self.old_fingerprint,
            "new_fingerprint": self.new_fingerprint,
            "added": list(self.added),
            "removed": list(self.removed),
            "modified": list(self.modified),
            "transitions": {
                "none_to_match": list(self.none_to_match),
                "match_to_none": list(self.match_to_none),
                "same": self.same_count,
            },
        }


def diff_packages(
    old: RulePackage, new: RulePackage, corpus: Sequence[str] = ()
) -> DeltaReport:
    old_rules = {r.name: r.fingerprint for r in old.rules}
    new_rules = {r.name: r.fingerprint for r in new.rules}
    added = tuple(sorted(set(new_rules) - set(old_rules)))
    removed = tuple(sorted(set(old_rules) - set(new_rules)))
    modified = tuple(
        sorted(
            name
            for name in set(old_rules) & set(new_rules)
            if old_rules[name] != new_rules[name]
        )
    )

    none_to_match: list[int] = []
    match_to_none: list[int] = []
    same = 0
    for idx, prompt in enumerate(corpus):
        before = bool(scan_text(old, prompt))
        after = bool(scan_text(new, prompt))
        if not before and after:
            none_to_match.append(idx)
        elif before and not after:
            match_to_none.append(idx)
        else:
            same += 1

    return DeltaReport(
        old_fingerprint=old.fingerprint,
        new_fingerprint=new.fingerprint,
        added=added,
        removed=removed,
        modified=modified,
        none_to_match=tuple(none_to_match),
        match_to_none=tuple(match_to_none),
        same_count=same,
    )
