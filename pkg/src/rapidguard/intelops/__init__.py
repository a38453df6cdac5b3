"""Threat-intelligence operations: ingest, score, triage, report."""

from .models import (
    Duplicate,
    EaseFactors,
    EmptyBody,
    EmptySection,
    GenerationFailure,
    IntelItem,
    InvalidTransition,
    NotScored,
    OutOfRange,
    PIR,
    REPORT_SECTIONS,
    Report,
    RevisionConflict,
    TaxonomyNode,
    UnknownItem,
)
from .pipeline import (
    INSUFFICIENT_DETAIL,
    IntelPipeline,
    PassthroughExtractor,
    TemplateReportGenerator,
    canonicalize,
    dedupe_key,
    draft_signature,
)
from .registry import CredibilityRegistry, PirRegistry
from .scoring import (
    SUSCEPTIBILITY_LABELS,
    combine_score,
    compute_ease,
    score_pir,
    susceptibility_from_label,
)

__all__ = [
    "CredibilityRegistry", "Duplicate", "EaseFactors", "EmptyBody",
    "EmptySection", "GenerationFailure", "INSUFFICIENT_DETAIL", "IntelItem",
    "IntelPipeline", "InvalidTransition", "NotScored", "OutOfRange", "PIR",
    "PassthroughExtractor", "PirRegistry", "REPORT_SECTIONS", "Report",
    "RevisionConflict", "SUSCEPTIBILITY_LABELS", "TaxonomyNode",
    "TemplateReportGenerator", "UnknownItem", "canonicalize", "combine_score",
    "compute_ease", "dedupe_key", "draft_signature", "score_pir",
    "susceptibility_from_label",
]
