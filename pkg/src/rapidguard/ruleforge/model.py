"""AST and result types for the signature rule language."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

REQUIRED_META_KEYS = ("description", "category", "severity", "created")

MetaValue = Union[str, int, bool]


@dataclass(frozen=True)
class StringPattern:
    """One declared string: ``$id = <pattern> [nocase]``.

    body is the raw pattern payload: the unescaped text for ``text``,
    the regex source for ``regex``, and for ``hex`` a tuple of byte
    values with None standing for the ``??`` wildcard.
    """

    id: str  # includes the leading '$'
    kind: str  # text | regex | hex
    body: object
    nocase: bool = False


# Condition expression nodes. All leaves reference declared string ids.


@dataclass(frozen=True)
class StringRef:
    string_id: str


@dataclass(frozen=True)
class CountCmp:
    string_id: str
    op: str  # < <= == >= >
    value: int


@dataclass(frozen=True)
class OfExpr:
    """``any of them`` / ``all of them`` / ``N of ($a, $b, ...)``.

    quorum is "any", "all", or an integer N. ids is None for ``them``
    (meaning every declared string)."""

    quorum: object
    ids: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Not:
    child: object


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


ConditionExpr = Union[StringRef, CountCmp, OfExpr, Not, And, Or]


@dataclass(frozen=True)
class Rule:
    name: str
    meta: tuple[tuple[str, MetaValue], ...]  # key order as canonicalized
    strings: tuple[StringPattern, ...]
    condition: ConditionExpr

    def meta_dict(self) -> dict[str, MetaValue]:
        return dict(self.meta)

    @property
    def severity(self) -> int:
        return int(self.meta_dict()["severity"])


@dataclass
class MatchResult:
    """One rule whose condition held against a scanned input.

    matched maps string ids to their (byte offset, byte length) match
    lists; only strings with at least one occurrence appear."""

    rule_name: str
    matched: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    meta: dict[str, MetaValue] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule_name,
            "matched": {
                sid: [[off, length] for off, length in spans]
                for sid, spans in sorted(self.matched.items())
            },
            "meta": dict(self.meta),
        }


def condition_string_ids(expr: ConditionExpr) -> set[str]:
    """All string ids referenced anywhere in a condition tree."""
    out: set[str] = set()

    def walk(node) -> None:
        if isinstance(node, StringRef):
            out.add(node.string_id)
        elif isinstance(node, CountCmp):
            out.add(node.string_id)
        elif isinstance(node, OfExpr):
            if node.ids is not None:
                out.update(node.ids)
        elif isinstance(node, Not):
            walk(node.child)
        elif isinstance(node, (And, Or)):
            for child in node.children:
                walk(child)
        else:
            raise TypeError(f"unknown condition node {node!r}")

    walk(expr)
    return out
