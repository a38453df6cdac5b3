"""Unified prompt knowledge table with golden labels and task queue."""

from .consensus import automated_consensus, compute_golden, human_consensus
from .evaluate import evaluate_version_offline
from .models import (
    ConfidenceOutOfRange,
    DriftReport,
    EmptyCorpus,
    EmptyText,
    EnrichmentTask,
    EvalResult,
    GoldenLabel,
    InsufficientData,
    KnowledgeError,
    LabelObservation,
    LeaseExpired,
    PromptRecord,
    TIER_AUTOMATED,
    TIER_HUMAN,
    TIER_SOURCE,
    TIER_UNDETERMINED,
    UnknownPrompt,
    UnknownTask,
    UnknownVersion,
)
from .sampling import sample_for_review, review_weight_components
from .store import KnowledgeBase, prompt_digest
from .tasks import TaskQueue
from .worker import EnrichmentWorker, detect_language

__all__ = [
    "ConfidenceOutOfRange", "DriftReport", "EmptyCorpus", "EmptyText",
    "EnrichmentTask", "EnrichmentWorker", "EvalResult", "GoldenLabel",
    "InsufficientData", "KnowledgeBase", "KnowledgeError", "LabelObservation",
    "LeaseExpired", "PromptRecord", "TIER_AUTOMATED", "TIER_HUMAN",
    "TIER_SOURCE", "TIER_UNDETERMINED", "TaskQueue", "UnknownPrompt",
    "UnknownTask", "UnknownVersion", "automated_consensus", "compute_golden",
    "detect_language", "evaluate_version_offline", "human_consensus",
    "prompt_digest", "review_weight_components", "sample_for_review",
]
