"""Pre-deployment package validation against benign and attack corpora.

A candidate package passes when it produces at most ``fp_cap`` hits on
the benign corpus (default 0: the strictest testable bar for not
blocking legitimate use), every rule carries the required metadata, and
the p95 per-prompt scan latency stays within the performance budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EmptyCorpus, InvalidMeta, MissingMeta
from .package import RulePackage
from .parser import check_required_meta
from .scanner import scan_text


@dataclass(frozen=True)
class PerfBudget:
    p95_ms: float = 50.0


@dataclass
class RuleValidation:
    rule_name: str
    benign_hits: int = 0  # benign prompts this rule matched
    attack_hits: int = 0  # attack prompts this rule matched
    meta_ok: bool = True
    meta_issues: list[str] = field(default_factory=list)


@dataclass
class ValidationReport:
    package_id: str
    version: int
    fingerprint: str
    per_rule: dict[str, RuleValidation]
    benign_fp_count: int  # benign prompts matched by any rule
    attack_hit_count: int  # attack prompts matched by any rule
    fp_cap: int
    p95_ms: float
    budget_p95_ms: float
    meta_ok: bool
    passes: bool

    def to_dict(self) -> dict:
        return {
            "package_id": self.package_id,
            "version": self.version,
            "fingerprint": self.fingerprint,
            "per_rule": {
                name: {
                    "benign_hits": rv.benign_hits,
                    "attack_hits": rv.attack_hits,
                    "meta_ok": rv.meta_ok,
                    "meta_issues": rv.meta_issues,
                }
                for name, rv in sorted(self.per_rule.items())
            },
            "benign_fp_count": self.benign_fp_count,
            "attack_hit_count": self.attack_hit_count,
            "fp_cap": self.fp_cap,
            "p95_ms": self.p95_ms,
            "budget_p95_ms": self.budget_p95_ms,
            "meta_ok": self.meta_ok,
            "passes": self.passes,
        }


def _p95(samples: list[float]) -> float:
    if not samples:
        return 0.0
    ordered = sorted(samples)
    rank = max(0, math.ceil(0.95 * len(ordered)) - 1)
    return ordered[rank]


def validate_package(
    candidate: RulePackage,
    benign_corpus: Sequence[str],
    attack_samples: Sequence[str],
    budget: PerfBudget = PerfBudget(),
    fp_cap: int = 0,
) -> ValidationReport:
    if not benign_corpus or not attack_samples:
        raise EmptyCorpus("validation requires non-empty benign and attack corpora")

    per_rule = {}
    for compiled in candidate.rules:
        rv = RuleValidation(rule_name=compiled.name)
        try:
            check_required_meta(compiled.name, compiled.meta_dict())
        except (MissingMeta, InvalidMeta) as exc:
            rv.meta_ok = False
            rv.meta_issues.append(str(exc))
        per_rule[compiled.name] = rv

    timings: list[float] = []
    benign_fp = 0
    attack_hit = 0
    for prompts, is_benign in ((benign_corpus, True), (attack_samples, False)):
        for prompt in prompts:
            start = time.perf_counter()
            matches = scan_text(candidate, prompt)
            timings.append((time.perf_counter() - start) * 1000.0)
            if matches:
                if is_benign:
                    benign_fp += 1
                else:
                    attack_hit += 1
            for match in matches:
                if is_benign:
                    per_rule[match.rule_name].benign_hits += 1
                else:
                    per_rule[match.rule_name].attack_hits += 1

    p95 = _p95(timings)
    meta_ok = all(rv.meta_ok for rv in per_rule.values())
    passes = benign_fp <= fp_cap and meta_ok and p95 <= budget.p95_ms
    return ValidationReport(
        package_id=candidate.package_id,
        version=candidate.version,
        fingerprint=candidate.fingerprint,
        per_rule=per_rule,
        benign_fp_count=benign_fp,
        attack_hit_count=attack_hit,
        fp_cap=fp_cap,
        p95_ms=p95,
        budget_p95_ms=budget.p95_ms,
        meta_ok=meta_ok,
        passes=passes,
    )
