"""Verdict computation: the serving path and shadow mirroring.

evaluate() is a pure function of (frozen version, text): signature
matches come from the immutable package, model scores from the cache or
a recompute, and the policy OR-combines them. Repeat evaluations yield
byte-identical evidence, which is what allows cached scores and replay
comparisons between versions.

check() serves exactly one verdict per request, computed from the
routed serving version only. Shadow versions are evaluated on a
separate thread behind a bounded queue: they can never change the
served response, add latency to it, or block serving (when the queue is
full, shadow work is dropped and counted).
"""

from __future__ import annotations

import hashlib
import queue
import threading
import time
import uuid
from typing import Callable

from ..ruleforge.scanner import scan_text
from .cache import ScoreCache
from .models import Deployment, VerdictRecord
from .registry import VersionRegistry
from .routing import route


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ShadowExecutor:
    """Single worker draining a bounded queue; overflow is shed."""

    def __init__(self, maxsize: int = 1024):
        self._queue: queue.Queue = queue.Queue(maxsize=maxsize)
        self.dropped = 0
        self.executed = 0
        self._lock = threading.Lock()
        self._thread = threading.Thread(target=self._run, name="shadow-eval", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        while True:
            job = self._queue.get()
            if job is None:
                self._queue.task_done()
                return
            try:
                job()
                with self._lock:
                    self.executed += 1
            except Exception:
                pass  # shadow failures must never affect serving
            finally:
                self._queue.task_done()

    def submit(self, job: Callable[[], None]) -> bool:
        try:
            self._queue.put_nowait(job)
            return True
        except queue.Full:
            with self._lock:
                self.dropped += 1
            return False

    def flush(self) -> None:
        self._queue.join()

    def stop(self) -> None:
        self._queue.put(None)
        self._thread.join(timeout=5)


class GuardrailEngine:
    def __init__(
        self,
        versions: VersionRegistry,
        kb,
        cache: ScoreCache | None = None,
        shadow_queue_size: int = 1024,
    ):
        self.versions = versions
        self.kb = kb
        self.cache = cache or ScoreCache()
        self.shadow = ShadowExecutor(maxsize=shadow_queue_size)
        self.requests_served = 0
        self.flags_served = 0
        self._counter_lock = threading.Lock()

    # --- evaluation ---------------------------------------------------------

    def evaluate(self, version_id: str, text: str) -> tuple[bool, dict]:
        version = self.versions.get(version_id)
        package = self.versions.packages.get(*version.signature_package)
        matches = scan_text(package, text)
        signature_evidence = [
            {
                "rule": m.rule_name,
                "offsets": sorted(
                    [off, length] for spans in m.matched.values() for off, length in spans
                ),
            }
            for m in matches
        ]
        digest = text_digest(text)
        model_scores: dict[str, float] = {}
        thresholds: dict[str, float] = {}
        model_flag = False
        for model_id, model_version in version.models:
            stub = self.versions.models.get(model_id, model_version)
            key = ScoreCache.key(model_id, model_version, digest)
            score = self.cache.get(key)
            if score is None:
                score = stub.score(text)
                self.cache.put(key, score)
            label = f"{model_id}@{model_version}"
            model_scores[label] = score
            thresholds[label] = stub.threshold
            if score >= stub.threshold:
                model_flag = True
        flagged = bool(signature_evidence) or model_flag
        evidence = {
            "signature_matches": signature_evidence,
            "model_scores": model_scores,
            "thresholds": thresholds,
        }
        return flagged, evidence

    # --- serving --------------------------------------------------------------

    def check(
        self,
        customer_id: str,
        text: str,
        deployment: Deployment,
    ) -> VerdictRecord:
        start = time.perf_counter()
        serving_id, shadow_ids = route(customer_id, deployment)
        flagged, evidence = self.evaluate(serving_id, text)
        prompt = self.kb.upsert_prompt(text, source="telemetry")
        verdict = VerdictRecord(
            request_id=uuid.uuid4().hex,
            customer_id=customer_id,
            prompt_id=prompt.prompt_id,
            version_id=serving_id,
            flagged=flagged,
            evidence=evidence,
            served=True,
            latency_ms=(time.perf_counter() - start) * 1000.0,
            epoch=deployment.epoch,
            environment=deployment.environment,
        )
        self.kb.record_telemetry(verdict.to_dict())
        with self._counter_lock:
            self.requests_served += 1
            self.flags_served += int(flagged)
        for shadow_id in shadow_ids:
            self.shadow.submit(
                self._shadow_job(verdict.request_id, customer_id, text, shadow_id, deployment)
            )
        return verdict

    def _shadow_job(
        self,
        request_id: str,
        customer_id: str,
        text: str,
        shadow_version: str,
        deployment: Deployment,
    ) -> Callable[[], None]:
        def job() -> None:
            start = time.perf_counter()
            flagged, evidence = self.evaluate(shadow_version, text)
            prompt = self.kb.upsert_prompt(text, source="telemetry")
            self.kb.record_telemetry(
                VerdictRecord(
                    request_id=request_id,
                    customer_id=customer_id,
                    prompt_id=prompt.prompt_id,
                    version_id=shadow_version,
                    flagged=flagged,
                    evidence=evidence,
                    served=False,
                    latency_ms=(time.perf_counter() - start) * 1000.0,
                    epoch=deployment.epoch,
                    environment=deployment.environment,
                ).to_dict()
            )

        return job

    def counters(self) -> dict[str, int]:
        return {
            "requests_served": self.requests_served,
            "flags_served": self.flags_served,
            "cache_hits": self.cache.hits,
            "cache_misses": self.cache.misses,
            "shadow_executed": self.shadow.executed,
            "shadow_dropped": self.shadow.dropped,
        }
