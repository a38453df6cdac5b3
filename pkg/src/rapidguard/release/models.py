"""Release-platform domain types.

Guardrail versions are immutable bundles: a signature package, a set of
detection model versions, and the orchestration policy that combines
them. Deployments assign frozen versions to traffic fractions and bump
an epoch on every change; verdicts record exactly what one version said
about one request.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ReleaseError(Exception):
    pass


class UnknownComponent(ReleaseError):
    pass


class UnknownVersion(ReleaseError):
    pass


class MutationOfFrozenVersion(ReleaseError):
    pass


class FractionSumInvalid(ReleaseError):
    pass


class UnfrozenVersion(ReleaseError):
    pass


class UnknownEpoch(ReleaseError):
    pass


class GateNotPassed(ReleaseError):
    pass


class InsufficientOverlap(ReleaseError):
    pass


class NoDeployment(ReleaseError):
    pass


class DuplicateModelVersion(ReleaseError):
    pass


ENVIRONMENTS = ("internal", "staging", "production")


@dataclass(frozen=True)
class ModelStub:
    """Deterministic stand-in for an ML detector: a versioned keyword
    weight table with a decision threshold. score() is a pure function
    of the input text, which is what makes score caching sound."""

    model_id: str
    version: int
    weights: tuple[tuple[str, float], ...]  # sorted keyword -> weight
    threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(
            self, "weights", tuple((k, float(w)) for k, w in self.weights)
        )
        object.__setattr__(self, "threshold", float(self.threshold))
        if not 0.0 <= self.threshold <= 1.0:
            raise ReleaseError(f"threshold {self.threshold} outside [0, 1]")

    def score(self, text: str) -> float:
        folded = text.lower()
        total = 0.0
        for keyword, weight in self.weights:  # fixed order: reproducible floats
            if keyword in folded:
                total += weight
        return min(1.0, max(0.0, total))

    @property
    def key(self) -> tuple[str, int]:
        return (self.model_id, self.version)

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "version": self.version,
            "weights": {k: w for k, w in self.weights},
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelStub":
        return cls(
            model_id=data["model_id"],
            version=data["version"],
            weights=tuple(sorted(data["weights"].items())),
            threshold=data["threshold"],
        )


@dataclass(frozen=True)
class OrchestrationPolicy:
    """Combination rule is fixed: flag iff any signature matches OR any
    model meets its threshold. surfaces records which traffic sides the
    guardrail should evaluate."""

    surfaces: str = "input"  # input | output | both

    def __post_init__(self):
        if self.surfaces not in ("input", "output", "both"):
            raise ReleaseError(f"surfaces must be input|output|both, got {self.surfaces!r}")

    def to_dict(self) -> dict:
        return {"surfaces": self.surfaces, "rule": "any_signature_or_model_threshold"}

    @classmethod
    def from_dict(cls, data: dict) -> "OrchestrationPolicy":
        return cls(surfaces=data.get("surfaces", "input"))


@dataclass(frozen=True)
class GuardrailVersion:
    version_id: str
    signature_package: tuple[str, int]  # (package_id, version)
    models: tuple[tuple[str, int], ...]
    policy: OrchestrationPolicy
    created_at: str
    frozen: bool = True

    def to_dict(self) -> dict:
        return {
            "version_id": self.version_id,
            "signature_package": list(self.signature_package),
            "models": [list(m) for m in self.models],
            "policy": self.policy.to_dict(),
            "created_at": self.created_at,
            "frozen": self.frozen,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GuardrailVersion":
        return cls(
            version_id=data["version_id"],
            signature_package=tuple(data["signature_package"]),
            models=tuple(tuple(m) for m in data["models"]),
            policy=OrchestrationPolicy.from_dict(data["policy"]),
            created_at=data["created_at"],
            frozen=data.get("frozen", True),
        )


@dataclass(frozen=True)
class Assignment:
    version_id: str
    mode: str  # serving | shadow
    fraction: float = 1.0

    def __post_init__(self):
        if self.mode not in ("serving", "shadow"):
            raise ReleaseError(f"mode must be serving or shadow, got {self.mode!r}")
        # JSON round-trips 1.0 as 1; normalize so payload digests agree
        object.__setattr__(self, "fraction", float(self.fraction))
        if not 0.0 <= self.fraction <= 1.0:
            raise ReleaseError(f"fraction {self.fraction} outside [0, 1]")

    def to_dict(self) -> dict:
        return {"version_id": self.version_id, "mode": self.mode, "fraction": self.fraction}

    @classmethod
    def from_dict(cls, data: dict) -> "Assignment":
        return cls(
            version_id=data["version_id"],
            mode=data["mode"],
            fraction=data.get("fraction", 1.0),
        )


@dataclass(frozen=True)
class Deployment:
    environment: str
    epoch: int
    assignments: tuple[Assignment, ...]
    created_at: str = ""

    def serving(self) -> tuple[Assignment, ...]:
        return tuple(a for a in self.assignments if a.mode == "serving")

    def shadows(self) -> tuple[Assignment, ...]:
        return tuple(a for a in self.assignments if a.mode == "shadow")

    def to_dict(self) -> dict:
        return {
            "environment": self.environment,
            "epoch": self.epoch,
            "assignments": [a.to_dict() for a in self.assignments],
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Deployment":
        return cls(
            environment=data["environment"],
            epoch=data["epoch"],
            assignments=tuple(Assignment.from_dict(a) for a in data["assignments"]),
            created_at=data.get("created_at", ""),
        )


@dataclass
class VerdictRecord:
    request_id: str
    customer_id: str | None
    prompt_id: str
    version_id: str
    flagged: bool
    evidence: dict
    served: bool
    latency_ms: float
    epoch: int
    environment: str

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "customer_id": self.customer_id,
            "prompt_id": self.prompt_id,
            "version_id": self.version_id,
            "flagged": self.flagged,
            "evidence": self.evidence,
            "served": self.served,
            "latency_ms": self.latency_ms,
            "epoch": self.epoch,
            "environment": self.environment,
        }

    def deterministic_projection(self) -> dict:
        """The fields that must be reproducible across runs (excludes
        request ids, latency, and timestamps)."""
        return {
            "prompt_id": self.prompt_id,
            "version_id": self.version_id,
            "flagged": self.flagged,
            "evidence": self.evidence,
        }


@dataclass
class GateReport:
    baseline: str
    candidate: str
    corpus_id: str
    fp_rate_delta: float
    recall_delta: float
    flag_rate_delta: float
    none_to_flag: int
    flag_to_none: int
    thresholds: dict
    passed: bool
    baseline_metrics: dict = field(default_factory=dict)
    candidate_metrics: dict = field(default_factory=dict)
    created_at: str = ""

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "candidate": self.candidate,
            "corpus": self.corpus_id,
            "fp_rate_delta": self.fp_rate_delta,
            "recall_delta": self.recall_delta,
            "flag_rate_delta": self.flag_rate_delta,
            "transitions": {
                "none_to_flag": self.none_to_flag,
                "flag_to_none": self.flag_to_none,
            },
            "thresholds": dict(self.thresholds),
            "pass": self.passed,
            "baseline_metrics": dict(self.baseline_metrics),
            "candidate_metrics": dict(self.candidate_metrics),
            "created_at": self.created_at,
        }
