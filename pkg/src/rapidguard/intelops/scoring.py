"""Priority scoring of ingested intelligence.

The score combines the average priority of the item's TTPs (full
weight), the average priority of its affected models (half weight),
the credibility of the source, and ease of implementation (half
weight), normalized by 3 onto the 0-5 scale:

    P = (T_avg + 0.5 * M_avg + S + 0.5 * E) / 3

A TTP or model with no active PIR contributes the configured floor
(default 0, the lowest score). Time-bound PIRs outside their window on
the scoring date are excluded from the active set.
"""

from __future__ import annotations

from datetime import date
from typing import Iterable

from .models import EaseFactors, IntelItem, OutOfRange, PIR

# Five-step susceptibility ladder, "unlikely to use / difficult to
# exploit" up to "highly likely to use / trivial to exploit". The
# numeric anchors are an even spread over the 0-5 scale.
SUSCEPTIBILITY_LABELS = {
    "unlikely": 0.0,
    "low": 1.25,
    "moderate": 2.5,
    "high": 3.75,
    "highly_likely": 5.0,
}


def susceptibility_from_label(label: str) -> float:
    try:
        return SUSCEPTIBILITY_LABELS[label]
    except KeyError:
        raise OutOfRange(
            f"unknown susceptibility label {label!r}; "
            f"expected one of {sorted(SUSCEPTIBILITY_LABELS)}"
        ) from None


def compute_ease(factors: EaseFactors) -> float:
    """Mean of susceptibility and the two 0-or-5 opportunity factors."""
    return (
        factors.susceptibility
        + 5.0 * bool(factors.signature_opportunity)
        + 5.0 * bool(factors.data_available)
    ) / 3.0


def combine_score(t_avg: float, m_avg: float, s: float, e: float) -> float:
    p = (t_avg + 0.5 * m_avg + s + 0.5 * e) / 3.0
    return min(5.0, max(0.0, p))


def _avg_priority(
    subjects: Iterable[str], active: dict[str, float], floor: float
) -> float:
    subjects = list(subjects)
    if not subjects:
        return floor
    return sum(active.get(subject, floor) for subject in subjects) / len(subjects)


def score_pir(
    item: IntelItem,
    pirs: Iterable[PIR],
    s: float,
    e: float,
    on_date: date | None = None,
    floor: float = 0.0,
) -> float:
    """Score an item and store the result on it."""
    if not 0.0 <= s <= 5.0:
        raise OutOfRange(f"source credibility {s} outside [0, 5]")
    if not 0.0 <= e <= 5.0:
        raise OutOfRange(f"ease of implementation {e} outside [0, 5]")
    on = on_date or date.today()
    ttp_prio: dict[str, float] = {}
    model_prio: dict[str, float] = {}
    for pir in pirs:
        if not pir.is_active(on):
            continue
        table = ttp_prio if pir.kind == "ttp" else model_prio
        # several active PIRs for one subject: the most urgent wins
        table[pir.subject] = max(table.get(pir.subject, 0.0), pir.priority)
    t_avg = _avg_priority(item.ttps, ttp_prio, floor)
    m_avg = _avg_priority(item.affected_models, model_prio, floor)
    score = combine_score(t_avg, m_avg, s, e)
    item.pir_score = score
    return score
