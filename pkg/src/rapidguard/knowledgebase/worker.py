"""Batch processor for enrichment tasks.

Pulls the highest-priority leased batch and completes each task with a
kind-specific handler, recording results back into the knowledge table:
signature scans append signature observations, LLM labeling appends llm
observations, guardrail evaluation records the verdict, language id and
translation run as deterministic stubs (translation just tags the text
with the target language; wiring a real service in means replacing one
handler).
"""

from __future__ import annotations

from typing import Callable

from .models import EnrichmentTask, LabelObservation
from .store import KnowledgeBase


def detect_language(text: str) -> str:
    """Stub language id: ASCII-dominant text is tagged "en"."""
    if not text:
        return "und"
    ascii_ratio = sum(1 for ch in text if ord(ch) < 128) / len(text)
    return "en" if ascii_ratio >= 0.9 else "und"


class EnrichmentWorker:
    """Completes tasks against the knowledge table.

    evaluate_fn: release-engine evaluate (version_id, text) -> (flagged,
    evidence), needed for eval_guardrail tasks. scan_fn: (package_id,
    version, text) -> list of matched rule names, needed for
    signature_scan tasks. llm_labeler: (text) -> (label, category,
    confidence) for llm_label tasks. Any handler left as None marks its
    tasks failed with a named reason instead of guessing.
    """

    def __init__(
        self,
        kb: KnowledgeBase,
        evaluate_fn: Callable[[str, str], tuple[bool, dict]] | None = None,
        scan_fn: Callable[[str, int, str], list[str]] | None = None,
        llm_labeler: Callable[[str], tuple[str, str | None, float]] | None = None,
        third_party_scorer: Callable[[str], float] | None = None,
    ):
        self.kb = kb
        self.evaluate_fn = evaluate_fn
        self.scan_fn = scan_fn
        self.llm_labeler = llm_labeler
        self.third_party_scorer = third_party_scorer

    def run_batch(self, n: int) -> list[EnrichmentTask]:
        """Lease up to n tasks, process each, return their final states."""
        done = []
        for task in self.kb.tasks.next_batch(n):
            try:
                result = self._process(task)
            except Exception as exc:
                done.append(
                    self.kb.tasks.complete(
                        task.task_id, failure=str(exc), lease_token=task.lease_token
                    )
                )
                continue
            done.append(
                self.kb.tasks.complete(
                    task.task_id, result=result, lease_token=task.lease_token
                )
            )
        return done

    def _process(self, task: EnrichmentTask) -> dict:
        text = self.kb.get_prompt(task.prompt_id).text
        kind = task.kind
        if kind == "language_id":
            return {"language": detect_language(text)}
        if kind == "translate":
            target = task.params.get("lang", "en")
            return {"translated_text": f"[{target}] {text}", "lang": target}
        if kind == "signature_scan":
            if self.scan_fn is None:
                raise RuntimeError("no signature scanner wired")
            package_id = task.params["package_id"]
            version = int(task.params["version"])
            matched = self.scan_fn(package_id, version, text)
            for rule_name in matched:
                self.kb.record_observation(
                    LabelObservation(
                        prompt_id=task.prompt_id,
                        labeler_kind="signature",
                        labeler_name=f"{package_id}@{version}",
                        label="malicious",
                        category=rule_name,
                        confidence=1.0,
                        observed_at="",
                    )
                )
            return {"matched_rules": matched}
        if kind == "eval_guardrail":
            if self.evaluate_fn is None:
                raise RuntimeError("no guardrail evaluator wired")
            version_id = task.params["version"]
            flagged, evidence = self.evaluate_fn(version_id, text)
            return {"version": version_id, "flagged": flagged, "evidence": evidence}
        if kind == "llm_label":
            if self.llm_labeler is None:
                raise RuntimeError("no llm labeler wired")
            label, category, confidence = self.llm_labeler(text)
            self.kb.record_observation(
                LabelObservation(
                    prompt_id=task.prompt_id,
                    labeler_kind="llm",
                    labeler_name=task.params.get("model", "llm-labeler"),
                    label=label,
                    category=category,
                    confidence=confidence,
                    observed_at="",
                )
            )
            return {"label": label, "category": category, "confidence": confidence}
        if kind == "third_party_score":
            if self.third_party_scorer is None:
                raise RuntimeError("no third-party scorer wired")
            return {"score": self.third_party_scorer(text)}
        raise RuntimeError(f"unknown task kind {kind!r}")
