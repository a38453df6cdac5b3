"""Knowledge-table domain types and errors."""

from __future__ import annotations

from dataclasses import dataclass, field

LABELS = ("benign", "malicious", "undetermined")

LABELER_KINDS = ("human", "llm", "signature", "source_dataset")

TASK_KINDS = (
    "llm_label",
    "language_id",
    "translate",
    "eval_guardrail",
    "third_party_score",
    "signature_scan",
)

TIER_HUMAN = 1
TIER_SOURCE = 2
TIER_AUTOMATED = 3
TIER_UNDETERMINED = 4


class KnowledgeError(Exception):
    pass


class EmptyText(KnowledgeError):
    pass


class UnknownPrompt(KnowledgeError):
    pass


class ConfidenceOutOfRange(KnowledgeError):
    pass


class UnknownTask(KnowledgeError):
    pass


class LeaseExpired(KnowledgeError):
    pass


class InsufficientData(KnowledgeError):
    pass


class EmptyCorpus(KnowledgeError):
    pass


class UnknownVersion(KnowledgeError):
    pass


@dataclass(frozen=True)
class PromptRecord:
    prompt_id: str  # sha-256 of the stored text
    text: str
    source: str  # telemetry | public_dataset | internal | generated
    created_at: str
    language: str | None = None
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LabelObservation:
    """One labeling event. labeler_name carries the LLM name or the
    signature package tag ("pkg@version"); None for plain human or
    source-dataset observations."""

    prompt_id: str
    labeler_kind: str  # human | llm | signature | source_dataset
    label: str  # benign | malicious | undetermined
    confidence: float
    observed_at: str
    labeler_name: str | None = None
    category: str | None = None  # for malicious labels
    obs_id: int | None = None  # assigned on append


@dataclass(frozen=True)
class GoldenLabel:
    prompt_id: str
    label: str
    tier: int  # 1 human, 2 source, 3 automated, 4 undetermined
    computed_at: str
    category: str | None = None
    inputs: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "label": self.label,
            "category": self.category,
            "tier": self.tier,
            "computed_at": self.computed_at,
            "inputs": list(self.inputs),
        }


@dataclass
class EnrichmentTask:
    task_id: int
    prompt_id: str
    kind: str
    params: dict
    priority: float
    state: str  # pending | running | done | failed
    attempts: int
    lease_token: str | None = None
    lease_expires: float | None = None
    result: dict | None = None


@dataclass
class EvalResult:
    version_id: str
    corpus_id: str
    verdicts: dict[str, bool]  # prompt_id -> flagged
    total: int
    flagged_count: int
    benign_count: int
    fp_count: int
    malicious_count: int
    detected_count: int

    @property
    def flag_rate(self) -> float:
        return self.flagged_count / self.total if self.total else 0.0

    @property
    def fp_rate(self) -> float:
        return self.fp_count / self.benign_count if self.benign_count else 0.0

    @property
    def recall(self) -> float:
        return self.detected_count / self.malicious_count if self.malicious_count else 0.0

    def to_dict(self) -> dict:
        return {
            "version": self.version_id,
            "corpus": self.corpus_id,
            "total": self.total,
            "flag_rate": self.flag_rate,
            "fp_rate": self.fp_rate,
            "recall": self.recall,
            "counts": {
                "flagged": self.flagged_count,
                "benign": self.benign_count,
                "false_positives": self.fp_count,
                "malicious": self.malicious_count,
                "detected": self.detected_count,
            },
        }


@dataclass
class DriftReport:
    window_size: int
    disagreements: tuple[str, ...]  # prompt ids
    drift: float
    threshold: float
    alert: bool

    def to_dict(self) -> dict:
        return {
            "window_size": self.window_size,
            "disagreements": list(self.disagreements),
            "drift": self.drift,
            "threshold": self.threshold,
            "alert": self.alert,
        }
