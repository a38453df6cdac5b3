"""Golden-label consensus over the observation log.

The golden label is a pure function of the observation multiset,
resolved through four tiers in strict precedence order:

  Tier 1  strict majority of non-abstaining human observations
          (an "undetermined" vote abstains; a tie falls through)
  Tier 2  the source-dataset label, when exactly one distinct value
          exists (conflicting source labels fall through)
  Tier 3  automated consensus: LLM observations plus one malicious
          vote per high-precision signature hit, requiring at least
          2/3 agreement
  Tier 4  undetermined

Only signature observations whose package passed validation with zero
benign false positives count toward tier 3; everything else from
signatures is treated as advisory and ignored here. Category ties are
broken lexicographically so recomputation is order-independent.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

from .models import (
    GoldenLabel,
    LabelObservation,
    TIER_AUTOMATED,
    TIER_HUMAN,
    TIER_SOURCE,
    TIER_UNDETERMINED,
)


def _majority_category(votes: Sequence[LabelObservation]) -> str | None:
    categories = [o.category for o in votes if o.category]
    if not categories:
        return None
    counts = Counter(categories)
    best = max(counts.values())
    return sorted(c for c, n in counts.items() if n == best)[0]


def _tally(votes: Sequence[LabelObservation]) -> tuple[str, int, int] | None:
    """(winning label, winner count, total) over non-abstaining votes."""
    decided = [o for o in votes if o.label in ("benign", "malicious")]
    if not decided:
        return None
    counts = Counter(o.label for o in decided)
    ranked = counts.most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return None  # tie
    label, top = ranked[0]
    return label, top, len(decided)


def compute_golden(
    prompt_id: str,
    observations: Iterable[LabelObservation],
    high_precision_signatures: frozenset[str] = frozenset(),
    computed_at: str = "",
) -> GoldenLabel:
    obs = sorted(
        observations,
        key=lambda o: (o.labeler_kind, o.labeler_name or "", o.label, o.category or "",
                       o.observed_at, o.obs_id or 0),
    )

    def ids(votes: Sequence[LabelObservation]) -> tuple[int, ...]:
        return tuple(sorted(o.obs_id for o in votes if o.obs_id is not None))

    # Tier 1: human strict majority
    humans = [o for o in obs if o.labeler_kind == "human"]
    tally = _tally(humans)
    if tally is not None:
        label, top, total = tally
        if top * 2 > total:
            winners = [o for o in humans if o.label == label]
            return GoldenLabel(
                prompt_id=prompt_id,
                label=label,
                category=_majority_category(winners) if label == "malicious" else None,
                tier=TIER_HUMAN,
                computed_at=computed_at,
                inputs=ids(humans),
            )

    # Tier 2: single distinct source-dataset label
    sources = [
        o for o in obs
        if o.labeler_kind == "source_dataset" and o.label in ("benign", "malicious")
    ]
    distinct = sorted({o.label for o in sources})
    if len(distinct) == 1:
        label = distinct[0]
        return GoldenLabel(
            prompt_id=prompt_id,
            label=label,
            category=_majority_category(sources) if label == "malicious" else None,
            tier=TIER_SOURCE,
            computed_at=computed_at,
            inputs=ids(sources),
        )

    # Tier 3: automated consensus with a 2/3 agreement bar
    automated = [o for o in obs if o.labeler_kind == "llm"]
    automated += [
        o for o in obs
        if o.labeler_kind == "signature" and o.labeler_name in high_precision_signatures
    ]
    tally = _tally(automated)
    if tally is not None:
        label, top, total = tally
        if top * 3 >= total * 2:
            winners = [o for o in automated if o.label == label]
            return GoldenLabel(
                prompt_id=prompt_id,
                label=label,
                category=_majority_category(winners) if label == "malicious" else None,
                tier=TIER_AUTOMATED,
                computed_at=computed_at,
                inputs=ids(automated),
            )

    return GoldenLabel(
        prompt_id=prompt_id,
        label="undetermined",
        category=None,
        tier=TIER_UNDETERMINED,
        computed_at=computed_at,
        inputs=ids(obs),
    )


def human_consensus(observations: Iterable[LabelObservation]) -> str | None:
    """Tier-1 style consensus over human votes alone, or None."""
    tally = _tally([o for o in observations if o.labeler_kind == "human"])
    if tally is None:
        return None
    label, top, total = tally
    return label if top * 2 > total else None


def automated_consensus(
    observations: Iterable[LabelObservation],
    high_precision_signatures: frozenset[str] = frozenset(),
) -> str | None:
    """Tier-3 style consensus over automated votes alone, or None."""
    votes = [o for o in observations if o.labeler_kind == "llm"]
    votes += [
        o for o in observations
        if o.labeler_kind == "signature" and o.labeler_name in high_precision_signatures
    ]
    tally = _tally(votes)
    if tally is None:
        return None
    label, top, total = tally
    return label if top * 3 >= total * 2 else None
