"""Rule compilation into immutable, fingerprinted packages.

A package's fingerprint is the SHA-256 of its rules' canonical sources
(sorted by rule name), so it identifies rule content exactly: any edit
changes it, and recompiling the same rules always reproduces it.
Version numbers are tags assigned by the author and must increase
monotonically per package id.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DuplicateRuleName,
    NonMonotonicVersion,
    RuleError,
    UndeclaredString,
)
from .model import Rule, condition_string_ids
from .parser import check_required_meta, parse_rule, render_rule
from .scanner import CompiledPattern


@dataclass(frozen=True, eq=False)
class CompiledRule:
    rule: Rule
    source: str  # canonical rendering
    fingerprint: str
    patterns: tuple[CompiledPattern, ...]

    @property
    def name(self) -> str:
        return self.rule.name

    @property
    def condition(self):
        return self.rule.condition

    def meta_dict(self) -> dict:
        return self.rule.meta_dict()


@dataclass(frozen=True, eq=False)
class RulePackage:
    package_id: str
    version: int
    rules: tuple[CompiledRule, ...]
    created_at: str
    fingerprint: str

    def rule_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.rules)


def compile_rule(rule: Rule) -> CompiledRule:
    """Compile one rule, re-running the semantic checks so that rules
    built programmatically get the same guarantees as parsed ones."""
    check_required_meta(rule.name, rule.meta_dict())
    declared = [p.id for p in rule.strings]
    if len(set(declared)) != len(declared):
        raise RuleError(f"rule {rule.name!r}: duplicate string declarations")
    for sid in sorted(condition_string_ids(rule.condition)):
        if sid not in declared:
            raise UndeclaredString(rule.name, sid)
    source = render_rule(rule)
    fingerprint = hashlib.sha256(source.encode("utf-8")).hexdigest()
    patterns = tuple(CompiledPattern(p) for p in rule.strings)
    return CompiledRule(rule=rule, source=source, fingerprint=fingerprint, patterns=patterns)


def package_fingerprint(compiled: Sequence[CompiledRule]) -> str:
    canonical = "\n\n".join(r.source for r in sorted(compiled, key=lambda r: r.name))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def compile_package(
    rules: Iterable[Rule],
    package_id: str,
    version: int,
    existing_versions: Iterable[int] = (),
) -> RulePackage:
    """Compile rules into an immutable package.

    existing_versions are the versions already published under this
    package_id; the new version must be strictly greater than all of
    them. An empty rule list is a valid bootstrap package.
    """
    if not isinstance(version, int) or version < 0:
        raise RuleError(f"version must be a non-negative integer, got {version!r}")
    existing = list(existing_versions)
    if existing and version <= max(existing):
        raise NonMonotonicVersion(package_id, version, max(existing))
    compiled: list[CompiledRule] = []
    seen: set[str] = set()
    for rule in rules:
        if rule.name in seen:
            raise DuplicateRuleName(rule.name)
        seen.add(rule.name)
        compiled.append(compile_rule(rule))
    return RulePackage(
        package_id=package_id,
        version=version,
        rules=tuple(compiled),
        created_at=datetime.now(timezone.utc).isoformat(),
        fingerprint=package_fingerprint(compiled),
    )


# --- Manifest (wire format) ----------------------------------------------


def to_manifest(package: RulePackage) -> dict:
    return {
        "package_id": package.package_id,
        "version": package.version,
        "created_at": package.created_at,
        "fingerprint": package.fingerprint,
        "rules": [r.source for r in package.rules],
    }


def from_manifest(manifest: dict) -> RulePackage:
    """Rebuild a package from its manifest; the stored fingerprint must
    match the recomputed one or the manifest is rejected as corrupt."""
    try:
        package_id = manifest["package_id"]
        version = manifest["version"]
        created_at = manifest["created_at"]
        fingerprint = manifest["fingerprint"]
        sources = manifest["rules"]
    except (KeyError, TypeError) as exc:
        raise RuleError(f"malformed package manifest: missing {exc}") from exc
    compiled = tuple(compile_rule(parse_rule(src)) for src in sources)
    recomputed = package_fingerprint(compiled)
    if recomputed != fingerprint:
        raise RuleError(
            f"manifest fingerprint mismatch for {package_id} v{version}: "
            f"stored {fingerprint[:12]}, recomputed {recomputed[:12]}"
        )
    return RulePackage(
        package_id=package_id,
        version=version,
        rules=compiled,
        created_at=created_at,
        fingerprint=fingerprint,
    )


def load_manifest(path: str | Path) -> RulePackage:
    return from_manifest(json.loads(Path(path).read_text(encoding="utf-8")))


def save_manifest(package: RulePackage, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(to_manifest(package), indent=2) + "\n", encoding="utf-8"
    )


class PackageRegistry:
    """Published packages, keyed (package_id, version). Publishing the
    same content twice is a no-op; publishing different content under an
    existing tag or a non-increasing version is rejected. With a
    directory attached, manifests persist as one JSON file per package.
    """

    def __init__(self, directory: str | Path | None = None):
        self._packages: dict[tuple[str, int], RulePackage] = {}
        self._dir = Path(directory) if directory is not None else None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
            for path in sorted(self._dir.glob("*.json")):
                pkg = load_manifest(path)
                self._packages[(pkg.package_id, pkg.version)] = pkg

    def versions(self, package_id: str) -> list[int]:
        return sorted(v for (pid, v) in self._packages if pid == package_id)

    def publish(self, rules: Iterable[Rule], package_id: str, version: int) -> RulePackage:
        package = compile_package(
            rules, package_id, version, existing_versions=self.versions(package_id)
        )
        return self.publish_package(package)

    def publish_package(self, package: RulePackage) -> RulePackage:
        key = (package.package_id, package.version)
        existing = self._packages.get(key)
        if existing is not None:
            if existing.fingerprint != package.fingerprint:
                raise RuleError(
                    f"package {package.package_id} v{package.version} is "
                    f"published and immutable; content differs"
                )
            return existing
        versions = self.versions(package.package_id)
        if versions and package.version <= max(versions):
            raise NonMonotonicVersion(package.package_id, package.version, max(versions))
        self._packages[key] = package
        if self._dir is not None:
            save_manifest(
                package, self._dir / f"{package.package_id}-v{package.version}.json"
            )
        return package

    def get(self, package_id: str, version: int) -> RulePackage:
        try:
            return self._packages[(package_id, version)]
        except KeyError:
            raise RuleError(f"unknown package {package_id} v{version}") from None

    def latest(self, package_id: str) -> RulePackage | None:
        versions = self.versions(package_id)
        return self._packages[(package_id, versions[-1])] if versions else None

    def __contains__(self, key: tuple[str, int]) -> bool:
        return key in self._packages
