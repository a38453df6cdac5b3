"""Deployment epochs, release gating, promotion, rollback, shadow diff.

Every routing change is a brand-new epoch: an immutable snapshot of the
assignment list, published atomically and kept forever, so rollback is
just re-publishing an old epoch's assignments and audits like any other
change. Promotion is policy-gated: a candidate needs a recorded passing
gate report before it can take traffic.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Sequence

from ..knowledgebase.evaluate import evaluate_version_offline
from ..knowledgebase.models import EmptyCorpus
from ..storage import Database
from .audit import AuditLog
from .engine import GuardrailEngine
from .models import (
    Assignment,
    Deployment,
    FractionSumInvalid,
    GateNotPassed,
    GateReport,
    InsufficientOverlap,
    NoDeployment,
    ReleaseError,
    UnknownEpoch,
)
from .registry import VersionRegistry

FRACTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GateThresholds:
    fp_rate_delta_max: float = 0.001
    recall_delta_min: float = -0.01
    flag_rate_delta_band: float = 0.005

    def to_dict(self) -> dict:
        return {
            "fp_rate_delta_max": self.fp_rate_delta_max,
            "recall_delta_min": self.recall_delta_min,
            "flag_rate_delta_band": self.flag_rate_delta_band,
        }


_SCHEMA = """
CREATE TABLE IF NOT EXISTS deployments (
    environment TEXT NOT NULL,
    epoch INTEGER NOT NULL,
    payload TEXT NOT NULL,
    PRIMARY KEY (environment, epoch)
);
CREATE TABLE IF NOT EXISTS gate_reports (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    baseline TEXT NOT NULL,
    candidate TEXT NOT NULL,
    corpus_id TEXT NOT NULL,
    passed INTEGER NOT NULL,
    payload TEXT NOT NULL
);
"""


class DeploymentManager:
    def __init__(
        self,
        db: Database | None = None,
        versions: VersionRegistry | None = None,
        audit: AuditLog | None = None,
        clock: Callable[[], float] = time.time,
        max_shadows: int = 1,
        gate_thresholds: GateThresholds = GateThresholds(),
        shadow_min_samples: int = 1000,
    ):
        self.db = db or Database()
        self.db.executescript(_SCHEMA)
        self.versions = versions or VersionRegistry(self.db)
        self.audit = audit or AuditLog()
        self.clock = clock
        self.max_shadows = max_shadows
        self.gate_thresholds = gate_thresholds
        self.shadow_min_samples = shadow_min_samples

    def _now_iso(self) -> str:
        return datetime.fromtimestamp(self.clock(), tz=timezone.utc).isoformat()

    # --- epochs -----------------------------------------------------------

    def _validate(self, assignments: Sequence[Assignment]) -> None:
        serving = [a for a in assignments if a.mode == "serving"]
        shadows = [a for a in assignments if a.mode == "shadow"]
        if not serving:
            raise FractionSumInvalid("at least one serving assignment required")
        total = sum(a.fraction for a in serving)
        if abs(total - 1.0) > FRACTION_TOLERANCE:
            raise FractionSumInvalid(f"serving fractions sum to {total}, need 1.0")
        if len(shadows) > self.max_shadows:
            raise ReleaseError(
                f"at most {self.max_shadows} shadow version(s) per environment"
            )
        seen = set()
        for a in assignments:
            version = self.versions.get(a.version_id)  # UnknownVersion if absent
            if not version.frozen:
                raise ReleaseError(f"version {a.version_id} is not frozen")
            if (a.version_id, a.mode) in seen:
                raise ReleaseError(f"duplicate assignment for {a.version_id} ({a.mode})")
            seen.add((a.version_id, a.mode))

    def create(
        self,
        environment: str,
        assignments: Sequence[Assignment],
        actor: str = "system",
        action: str = "create_deployment",
    ) -> Deployment:
        self._validate(assignments)
        with self.db.lock:
            row = self.db.query_one(
                "SELECT COALESCE(MAX(epoch), 0) AS e FROM deployments WHERE environment = ?",
                (environment,),
            )
            deployment = Deployment(
                environment=environment,
                epoch=row["e"] + 1,
                assignments=tuple(assignments),
                created_at=self._now_iso(),
            )
            self.db.execute(
                "INSERT INTO deployments (environment, epoch, payload) VALUES (?, ?, ?)",
                (environment, deployment.epoch, json.dumps(deployment.to_dict())),
            )
        self.audit.append(
            actor,
            action,
            {"environment": environment, "assignments": [a.to_dict() for a in assignments]},
            epoch=deployment.epoch,
            environment=environment,
        )
        return deployment

    def current(self, environment: str) -> Deployment:
        row = self.db.query_one(
            "SELECT payload FROM deployments WHERE environment = ? "
            "ORDER BY epoch DESC LIMIT 1",
            (environment,),
        )
        if row is None:
            raise NoDeployment(f"no deployment in environment {environment!r}")
        return Deployment.from_dict(json.loads(row["payload"]))

    def get_epoch(self, environment: str, epoch: int) -> Deployment:
        row = self.db.query_one(
            "SELECT payload FROM deployments WHERE environment = ? AND epoch = ?",
            (environment, epoch),
        )
        if row is None:
            raise UnknownEpoch(f"no epoch {epoch} in environment {environment!r}")
        return Deployment.from_dict(json.loads(row["payload"]))

    def history(self, environment: str) -> list[Deployment]:
        rows = self.db.query(
            "SELECT payload FROM deployments WHERE environment = ? ORDER BY epoch",
            (environment,),
        )
        return [Deployment.from_dict(json.loads(r["payload"])) for r in rows]

    def environments(self) -> list[str]:
        return [
            r["environment"]
            for r in self.db.query("SELECT DISTINCT environment FROM deployments ORDER BY 1")
        ]

    # --- rollback and promotion ------------------------------------------------

    def rollback(self, environment: str, target_epoch: int, actor: str = "system") -> Deployment:
        target = self.get_epoch(environment, target_epoch)
        return self.create(
            environment,
            target.assignments,
            actor=actor,
            action="rollback",
        )

    def promote(
        self,
        environment: str,
        version_id: str,
        schedule: Sequence[float],
        steps: int | None = None,
        actor: str = "system",
    ) -> Deployment:
        """Advance version_id along the fraction schedule, one epoch per
        step (default: all remaining steps). Requires a recorded passing
        gate report for the version."""
        self.versions.get(version_id)
        if not self.has_passing_gate(version_id):
            raise GateNotPassed(
                f"version {version_id} has no passing gate report recorded"
            )
        deployment = self.current(environment)
        current_fraction = 0.0
        for a in deployment.serving():
            if a.version_id == version_id:
                current_fraction = a.fraction
        remaining = [f for f in schedule if f > current_fraction + FRACTION_TOLERANCE]
        if steps is not None:
            remaining = remaining[: max(0, steps)]
        if not remaining:
            return deployment
        for fraction in remaining:
            others = [
                a for a in deployment.serving() if a.version_id != version_id
            ]
            others_total = sum(a.fraction for a in others)
            scale = (1.0 - fraction) / others_total if others_total > 0 else 0.0
            new_serving = [
                Assignment(a.version_id, "serving", a.fraction * scale)
                for a in others
                if a.fraction * scale > FRACTION_TOLERANCE
            ]
            new_serving.append(Assignment(version_id, "serving", fraction))
            if fraction >= 1.0 - FRACTION_TOLERANCE:
                new_serving = [Assignment(version_id, "serving", 1.0)]
            shadows = [
                a for a in deployment.shadows() if a.version_id != version_id
            ]
            deployment = self.create(
                environment,
                tuple(new_serving) + tuple(shadows),
                actor=actor,
                action="promote",
            )
        return deployment

    # --- gating ---------------------------------------------------------------

    def gate_release(
        self,
        kb,
        engine: GuardrailEngine,
        baseline: str,
        candidate: str,
        corpus_id: str,
        actor: str = "system",
    ) -> GateReport:
        self.versions.get(baseline)
        self.versions.get(candidate)
        base = evaluate_version_offline(kb, engine.evaluate, baseline, corpus_id)
        cand = evaluate_version_offline(kb, engine.evaluate, candidate, corpus_id)
        if base.benign_count + base.malicious_count == 0:
            raise EmptyCorpus(f"corpus {corpus_id!r} has no golden-labeled prompts")
        none_to_flag = sum(
            1
            for pid, flagged in cand.verdicts.items()
            if flagged and not base.verdicts.get(pid, False)
        )
        flag_to_none = sum(
            1
            for pid, flagged in base.verdicts.items()
            if flagged and not cand.verdicts.get(pid, False)
        )
        thresholds = self.gate_thresholds
        fp_delta = cand.fp_rate - base.fp_rate
        recall_delta = cand.recall - base.recall
        flag_delta = cand.flag_rate - base.flag_rate
        passed = (
            fp_delta <= thresholds.fp_rate_delta_max
            and recall_delta >= thresholds.recall_delta_min
            and abs(flag_delta) <= thresholds.flag_rate_delta_band
        )
        report = GateReport(
            baseline=baseline,
            candidate=candidate,
            corpus_id=corpus_id,
            fp_rate_delta=fp_delta,
            recall_delta=recall_delta,
            flag_rate_delta=flag_delta,
            none_to_flag=none_to_flag,
            flag_to_none=flag_to_none,
            thresholds=thresholds.to_dict(),
            passed=passed,
            baseline_metrics=base.to_dict(),
            candidate_metrics=cand.to_dict(),
            created_at=self._now_iso(),
        )
        self.db.execute(
            "INSERT INTO gate_reports (baseline, candidate, corpus_id, passed, payload) "
            "VALUES (?, ?, ?, ?, ?)",
            (baseline, candidate, corpus_id, int(passed), json.dumps(report.to_dict())),
        )
        self.audit.append(
            actor,
            "gate",
            {"baseline": baseline, "candidate": candidate, "corpus": corpus_id},
            environment=None,
        )
        return report

    def has_passing_gate(self, candidate: str) -> bool:
        return (
            self.db.query_one(
                "SELECT 1 FROM gate_reports WHERE candidate = ? AND passed = 1",
                (candidate,),
            )
            is not None
        )

    def gate_reports(self, candidate: str | None = None) -> list[dict]:
        if candidate is None:
            rows = self.db.query("SELECT payload FROM gate_reports ORDER BY seq")
        else:
            rows = self.db.query(
                "SELECT payload FROM gate_reports WHERE candidate = ? ORDER BY seq",
                (candidate,),
            )
        return [json.loads(r["payload"]) for r in rows]

    # --- shadow comparison -------------------------------------------------------

    def shadow_compare(
        self,
        kb,
        serving_version: str,
        shadow_version: str,
        min_samples: int | None = None,
    ) -> dict:
        """Disagreements between two versions over requests that both
        evaluated (live shadow traffic or a replayed corpus)."""
        min_samples = self.shadow_min_samples if min_samples is None else min_samples
        serving_rows = {
            r["request_id"]: r for r in kb.telemetry_rows(version_id=serving_version)
        }
        shadow_rows = {
            r["request_id"]: r for r in kb.telemetry_rows(version_id=shadow_version)
        }
        overlap = sorted(set(serving_rows) & set(shadow_rows))
        if len(overlap) < min_samples:
            raise InsufficientOverlap(
                f"need {min_samples} overlapping requests, have {len(overlap)}"
            )
        serving_flags = sum(serving_rows[r]["flagged"] for r in overlap)
        shadow_flags = sum(shadow_rows[r]["flagged"] for r in overlap)
        disagreements = [
            r for r in overlap if serving_rows[r]["flagged"] != shadow_rows[r]["flagged"]
        ]
        n = len(overlap)
        return {
            "serving_version": serving_version,
            "shadow_version": shadow_version,
            "window": n,
            "serving_flag_rate": serving_flags / n,
            "shadow_flag_rate": shadow_flags / n,
            "flag_rate_delta": shadow_flags / n - serving_flags / n,
            "disagreement_count": len(disagreements),
            "disagreements": disagreements[:100],
        }
