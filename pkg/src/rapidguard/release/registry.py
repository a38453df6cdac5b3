"""Model and guardrail version registries.

Both are append-only: a (model_id, version) pair and a guardrail
version_id can be registered once and never change afterwards.
Version ids are sequential tags, not content hashes; registering the
same components twice deliberately yields two distinct versions.
"""

from __future__ import annotations

import json
import time
from datetime import datetime, timezone
from typing import Callable, Iterable

from ..ruleforge.package import PackageRegistry
from ..storage import Database
from .models import (
    DuplicateModelVersion,
    GuardrailVersion,
    ModelStub,
    MutationOfFrozenVersion,
    OrchestrationPolicy,
    UnknownComponent,
    UnknownVersion,
)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS model_stubs (
    model_id TEXT NOT NULL,
    version INTEGER NOT NULL,
    payload TEXT NOT NULL,
    PRIMARY KEY (model_id, version)
);
CREATE TABLE IF NOT EXISTS guardrail_versions (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    version_id TEXT UNIQUE NOT NULL,
    payload TEXT NOT NULL
);
"""


class ModelRegistry:
    def __init__(self, db: Database | None = None):
        self.db = db or Database()
        self.db.executescript(_SCHEMA)

    def register(self, stub: ModelStub) -> ModelStub:
        with self.db.lock:
            if self.db.query_one(
                "SELECT 1 FROM model_stubs WHERE model_id = ? AND version = ?",
                stub.key,
            ):
                raise DuplicateModelVersion(
                    f"model {stub.model_id} v{stub.version} already registered; "
                    "model versions are immutable"
                )
            self.db.execute(
                "INSERT INTO model_stubs (model_id, version, payload) VALUES (?, ?, ?)",
                (stub.model_id, stub.version, json.dumps(stub.to_dict())),
            )
        return stub

    def get(self, model_id: str, version: int) -> ModelStub:
        row = self.db.query_one(
            "SELECT payload FROM model_stubs WHERE model_id = ? AND version = ?",
            (model_id, version),
        )
        if row is None:
            raise UnknownComponent(f"unknown model {model_id} v{version}")
        return ModelStub.from_dict(json.loads(row["payload"]))

    def __contains__(self, key: tuple[str, int]) -> bool:
        return (
            self.db.query_one(
                "SELECT 1 FROM model_stubs WHERE model_id = ? AND version = ?", key
            )
            is not None
        )


class VersionRegistry:
    def __init__(
        self,
        db: Database | None = None,
        packages: PackageRegistry | None = None,
        models: ModelRegistry | None = None,
        clock: Callable[[], float] = time.time,
    ):
        self.db = db or Database()
        self.db.executescript(_SCHEMA)
        self.packages = packages or PackageRegistry()
        self.models = models or ModelRegistry(self.db)
        self.clock = clock

    def register(
        self,
        signature_package: tuple[str, int],
        models: Iterable[tuple[str, int]],
        policy: OrchestrationPolicy | None = None,
    ) -> GuardrailVersion:
        policy = policy or OrchestrationPolicy()
        package_key = (signature_package[0], int(signature_package[1]))
        if package_key not in self.packages:
            raise UnknownComponent(
                f"unknown signature package {package_key[0]} v{package_key[1]}"
            )
        model_keys = tuple((m, int(v)) for m, v in models)
        for key in model_keys:
            if key not in self.models:
                raise UnknownComponent(f"unknown model {key[0]} v{key[1]}")
        with self.db.lock:
            seq = self.db.query_one(
                "SELECT COALESCE(MAX(seq), 0) + 1 AS n FROM guardrail_versions"
            )["n"]
            version = GuardrailVersion(
                version_id=f"gv-{seq:04d}",
                signature_package=package_key,
                models=model_keys,
                policy=policy,
                created_at=datetime.fromtimestamp(
                    self.clock(), tz=timezone.utc
                ).isoformat(),
            )
            self.db.execute(
                "INSERT INTO guardrail_versions (version_id, payload) VALUES (?, ?)",
                (version.version_id, json.dumps(version.to_dict())),
            )
        return version

    def get(self, version_id: str) -> GuardrailVersion:
        row = self.db.query_one(
            "SELECT payload FROM guardrail_versions WHERE version_id = ?",
            (version_id,),
        )
        if row is None:
            raise UnknownVersion(f"unknown guardrail version {version_id!r}")
        return GuardrailVersion.from_dict(json.loads(row["payload"]))

    def exists(self, version_id: str) -> bool:
        return (
            self.db.query_one(
                "SELECT 1 FROM guardrail_versions WHERE version_id = ?", (version_id,)
            )
            is not None
        )

    def list_ids(self) -> list[str]:
        return [
            r["version_id"]
            for r in self.db.query("SELECT version_id FROM guardrail_versions ORDER BY seq")
        ]

    def set_policy(self, version_id: str, policy: OrchestrationPolicy) -> None:
        """Versions are frozen on registration; register a new version
        instead of editing one."""
        self.get(version_id)  # UnknownVersion if absent
        raise MutationOfFrozenVersion(
            f"version {version_id} is frozen; register a new version instead"
        )
