"""Pattern compilation and package scanning.

Matching runs over the UTF-8 bytes of the input. A pattern's match set
is the set of (offset, length) pairs at which it matches; text and hex
patterns have fixed length, regex patterns report the longest match at
each matching offset. ``nocase`` folds ASCII only, by folding both the
pattern and (once per scan) the input.
"""

from __future__ import annotations

from .model import (
    And,
    CountCmp,
    MatchResult,
    Not,
    OfExpr,
    Or,
    StringPattern,
    StringRef,
)
from . import rex

_ASCII_LOWER = bytes(
    b + 0x20 if 0x41 <= b <= 0x5A else b for b in range(256)
)


def fold_ascii(data: bytes) -> bytes:
    return data.translate(_ASCII_LOWER)


class CompiledPattern:
    """One string pattern compiled for scanning."""

    def __init__(self, pattern: StringPattern):
        self.pattern = pattern
        self.id = pattern.id
        kind = pattern.kind
        if kind == "text":
            needle = pattern.body.encode("utf-8")
            self._needle = fold_ascii(needle) if pattern.nocase else needle
            self._rex = None
        elif kind == "hex":
            node = rex.Seq(
                tuple(
                    rex.ByteSet((1 << 256) - 1 if b is None else 1 << b)
                    for b in pattern.body
                )
            )
            self._rex = rex.CompiledRegex(node)
            self._needle = None
        elif kind == "regex":
            self._rex = rex.compile_pattern(pattern.body, nocase=pattern.nocase)
            self._needle = None
        else:
            raise ValueError(f"unknown pattern kind {kind!r}")

    @property
    def needs_fold(self) -> bool:
        return self.pattern.kind == "text" and self.pattern.nocase

    def find_all(self, data: bytes, folded: bytes | None = None) -> list[tuple[int, int]]:
        """All (offset, length) occurrences, overlapping included."""
        if self._needle is not None:
            haystack = folded if self.needs_fold else data
            needle = self._needle
            out = []
            i = haystack.find(needle)
            while i >= 0:
                out.append((i, len(needle)))
                i = haystack.find(needle, i + 1)
            return out
        return self._rex.find_all(data)


def evaluate_condition(node, counts: dict[str, int], declared: tuple[str, ...]) -> bool:
    """Evaluate a condition tree given per-string occurrence counts.

    ``any of them`` / ``all of them`` over zero declared strings are
    both false, so an empty rule can never match."""
    if isinstance(node, StringRef):
        return counts[node.string_id] >= 1
    if isinstance(node, CountCmp):
        count = counts[node.string_id]
        op = node.op
        if op == "<":
            return count < node.value
        if op == "<=":
            return count <= node.value
        if op == "==":
            return count == node.value
        if op == ">=":
            return count >= node.value
        return count > node.value
    if isinstance(node, OfExpr):
        ids = declared if node.ids is None else node.ids
        hit = sum(1 for sid in ids if counts[sid] >= 1)
        if node.quorum == "any":
            return hit >= 1
        if node.quorum == "all":
            return len(ids) > 0 and hit == len(ids)
        return hit >= node.quorum
    if isinstance(node, Not):
        return not evaluate_condition(node.child, counts, declared)
    if isinstance(node, And):
        return all(evaluate_condition(c, counts, declared) for c in node.children)
    if isinstance(node, Or):
        return any(evaluate_condition(c, counts, declared) for c in node.children)
    raise TypeError(f"unknown condition node {node!r}")


def scan_bytes(package, data: bytes) -> list[MatchResult]:
    """Scan raw bytes; returns matches sorted by rule name so the result
    is independent of rule declaration order."""
    folded = None
    results = []
    for compiled in package.rules:
        if folded is None and any(p.needs_fold for p in compiled.patterns):
            folded = fold_ascii(data)
        matches: dict[str, list[tuple[int, int]]] = {}
        counts: dict[str, int] = {}
        for cp in compiled.patterns:
            spans = cp.find_all(data, folded)
            counts[cp.id] = len(spans)
            if spans:
                matches[cp.id] = spans
        declared = tuple(p.id for p in compiled.patterns)
        if evaluate_condition(compiled.condition, counts, declared):
            results.append(
                MatchResult(
                    rule_name=compiled.name,
                    matched=matches,
                    meta=compiled.meta_dict(),
                )
            )
    results.sort(key=lambda m: m.rule_name)
    return results


def scan_text(package, text: str) -> list[MatchResult]:
    """Scan a prompt (UTF-8 text) against a compiled package."""
    return scan_bytes(package, text.encode("utf-8"))
