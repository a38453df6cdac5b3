"""Offline evaluation of a guardrail version over a stored corpus.

Runs the versioned guardrail (through the release engine, so component
scores come from its cache) across every prompt in the corpus and
reports flag rate over all prompts, false-positive rate over the
golden-benign subset, and recall over the golden-malicious subset.
All three are exact ratios of integer verdict counts.
"""

from __future__ import annotations

from typing import Callable

from .models import EmptyCorpus, EvalResult


def evaluate_version_offline(
    kb,
    evaluate_fn: Callable[[str, str], tuple[bool, dict]],
    version_id: str,
    corpus_id: str,
) -> EvalResult:
    """evaluate_fn(version_id, text) -> (flagged, evidence); typically
    release.GuardrailEngine.evaluate. Raises UnknownVersion through the
    engine when the version does not exist."""
    prompts = kb.corpus_prompts(corpus_id)
    if not prompts:
        raise EmptyCorpus(f"corpus {corpus_id!r} is empty or unknown")

    verdicts: dict[str, bool] = {}
    benign = malicious = fp = detected = flagged_total = 0
    for record in prompts:
        flagged, _evidence = evaluate_fn(version_id, record.text)
        verdicts[record.prompt_id] = flagged
        flagged_total += int(flagged)
        golden = kb.golden_label(record.prompt_id)
        if golden.label == "benign":
            benign += 1
            fp += int(flagged)
        elif golden.label == "malicious":
            malicious += 1
            detected += int(flagged)

    return EvalResult(
        version_id=version_id,
        corpus_id=corpus_id,
        verdicts=verdicts,
        total=len(prompts),
        flagged_count=flagged_total,
        benign_count=benign,
        fp_count=fp,
        malicious_count=malicious,
        detected_count=detected,
    )
