"""Deterministic customer routing.

Customers hash into one of 10,000 buckets (0.01% rollout granularity);
the serving version is chosen by walking the cumulative fractions of
the ordered serving assignments. Routing is a pure function of
(customer_id, assignments): no state, no randomness, stable across
processes, which is what makes gradual migration and exact rollback
possible.
"""

from __future__ import annotations

import hashlib

from .models import Assignment, Deployment

BUCKETS = 10_000


def bucket_for(customer_id: str) -> int:
    digest = hashlib.sha256(customer_id.encode("utf-8")).hexdigest()
    return int(digest, 16) % BUCKETS


def boundaries(serving: tuple[Assignment, ...]) -> list[int]:
    """Cumulative bucket boundaries for the ordered serving assignments."""
    out = []
    acc = 0.0
    for assignment in serving:
        acc += assignment.fraction
        out.append(round(acc * BUCKETS))
    if out:
        out[-1] = BUCKETS  # close the last interval despite float error
    return out


def version_for_bucket(bucket: int, serving: tuple[Assignment, ...]) -> str:
    for assignment, bound in zip(serving, boundaries(serving)):
        if bucket < bound:
            return assignment.version_id
    raise ValueError("no serving assignment covers the bucket")


def route(customer_id: str, deployment: Deployment) -> tuple[str, tuple[str, ...]]:
    """(serving version id, shadow version ids) for this customer."""
    serving = deployment.serving()
    version_id = version_for_bucket(bucket_for(customer_id), serving)
    return version_id, tuple(a.version_id for a in deployment.shadows())


def routing_table(deployment: Deployment) -> list[str]:
    """Version id per bucket, all 10,000 buckets enumerated exactly."""
    serving = deployment.serving()
    bounds = boundaries(serving)
    table = []
    idx = 0
    for bucket in range(BUCKETS):
        while bucket >= bounds[idx]:
            idx += 1
        table.append(serving[idx].version_id)
    return table
