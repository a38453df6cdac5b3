"""Weighted review sampling: risk, novelty, customer impact.

weight = w_r * risk + w_n * novelty + w_i * impact, defaults 0.5/0.3/0.2.

risk      baseline 0.2; +0.4 when the prompt was flagged in telemetry;
          +0.4 when any model score sat within the borderline band
          (|score - threshold| <= 0.05) in any verdict. Capped at 1.
novelty   1 - max cosine similarity of the prompt's character-trigram
          profile against already-reviewed prompts (1.0 when nothing
          has been reviewed yet).
impact    telemetry hit count, log-scaled and normalized against the
          busiest candidate.

Sampling is without replacement and deterministic under a fixed seed.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter

BORDERLINE_EPSILON = 0.05

DEFAULT_WEIGHTS = {"risk": 0.5, "novelty": 0.3, "impact": 0.2}


def trigram_profile(text: str) -> Counter:
    folded = text.lower()
    return Counter(folded[i : i + 3] for i in range(max(0, len(folded) - 2)))


def cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    dot = sum(v * large.get(k, 0) for k, v in small.items())
    if dot == 0:
        return 0.0
    norm = math.sqrt(sum(v * v for v in a.values())) * math.sqrt(
        sum(v * v for v in b.values())
    )
    return dot / norm


def _risk(rows: list[dict], epsilon: float) -> float:
    risk = 0.2
    if any(row["flagged"] for row in rows):
        risk += 0.4
    borderline = False
    for row in rows:
        evidence = json.loads(row["evidence"]) if isinstance(row["evidence"], str) else row["evidence"]
        scores = evidence.get("model_scores", {})
        thresholds = evidence.get("thresholds", {})
        for model, score in scores.items():
            theta = thresholds.get(model)
            if theta is not None and abs(score - theta) <= epsilon:
                borderline = True
    if borderline:
        risk += 0.4
    return min(1.0, risk)


def sample_for_review(
    kb,
    n: int,
    seed: int = 0,
    weights: dict | None = None,
    epsilon: float = BORDERLINE_EPSILON,
) -> list[str]:
    """Pick up to n prompt ids for human review."""
    weights = {**DEFAULT_WEIGHTS, **(weights or {})}
    reviewed = set(kb.reviewed_ids())
    candidates = [pid for pid in kb.all_prompt_ids() if pid not in reviewed]
    if not candidates:
        return []

    reviewed_profiles = [
        trigram_profile(kb.get_prompt(pid).text) for pid in sorted(reviewed)
    ]
    telemetry_by_prompt = {pid: kb.telemetry_rows(prompt_id=pid) for pid in candidates}
    max_hits = max((len(rows) for rows in telemetry_by_prompt.values()), default=0)

    scored: list[tuple[str, float]] = []
    for pid in candidates:
        rows = telemetry_by_prompt[pid]
        risk = _risk(rows, epsilon)
        profile = trigram_profile(kb.get_prompt(pid).text)
        if reviewed_profiles:
            novelty = 1.0 - max(cosine(profile, rp) for rp in reviewed_profiles)
        else:
            novelty = 1.0
        impact = (
            math.log1p(len(rows)) / math.log1p(max_hits) if max_hits > 0 else 0.0
        )
        weight = (
            weights["risk"] * risk
            + weights["novelty"] * novelty
            + weights["impact"] * impact
        )
        scored.append((pid, weight))

    rng = random.Random(seed)
    picked: list[str] = []
    pool = list(scored)
    while pool and len(picked) < n:
        total = sum(w for _, w in pool)
        if total <= 0:
            index = rng.randrange(len(pool))
        else:
            point = rng.random() * total
            acc = 0.0
            index = len(pool) - 1
            for i, (_, w) in enumerate(pool):
                acc += w
                if point <= acc:
                    index = i
                    break
        picked.append(pool.pop(index)[0])
    return picked


def review_weight_components(kb, prompt_id: str, epsilon: float = BORDERLINE_EPSILON) -> dict:
    """Expose the per-axis scores for one prompt (console/debugging)."""
    rows = kb.telemetry_rows(prompt_id=prompt_id)
    reviewed = set(kb.reviewed_ids())
    profile = trigram_profile(kb.get_prompt(prompt_id).text)
    reviewed_profiles = [
        trigram_profile(kb.get_prompt(pid).text) for pid in sorted(reviewed)
    ]
    novelty = (
        1.0 - max(cosine(profile, rp) for rp in reviewed_profiles)
        if reviewed_profiles
        else 1.0
    )
    return {
        "risk": _risk(rows, epsilon),
        "novelty": novelty,
        "telemetry_hits": len(rows),
    }
