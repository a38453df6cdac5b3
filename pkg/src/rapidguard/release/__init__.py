"""Immutable multi-version guardrail registry and release orchestration."""

from .audit import AuditLog, payload_digest
from .cache import ScoreCache
from .deploy import DeploymentManager, GateThresholds
from .engine import GuardrailEngine, ShadowExecutor, text_digest
from .models import (
    Assignment,
    Deployment,
    DuplicateModelVersion,
    FractionSumInvalid,
    GateNotPassed,
    GateReport,
    GuardrailVersion,
    InsufficientOverlap,
    ModelStub,
    MutationOfFrozenVersion,
    NoDeployment,
    OrchestrationPolicy,
    ReleaseError,
    UnfrozenVersion,
    UnknownComponent,
    UnknownEpoch,
    UnknownVersion,
    VerdictRecord,
)
from .registry import ModelRegistry, VersionRegistry
from .routing import BUCKETS, bucket_for, route, routing_table, version_for_bucket

__all__ = [
    "Assignment", "AuditLog", "BUCKETS", "Deployment", "DeploymentManager",
    "DuplicateModelVersion", "FractionSumInvalid", "GateNotPassed", "GateReport",
    "GateThresholds", "GuardrailEngine", "GuardrailVersion", "InsufficientOverlap",
    "ModelRegistry", "ModelStub", "MutationOfFrozenVersion", "NoDeployment",
    "OrchestrationPolicy", "ReleaseError", "ScoreCache", "ShadowExecutor",
    "UnfrozenVersion", "UnknownComponent", "UnknownEpoch", "UnknownVersion",
    "VerdictRecord", "VersionRegistry", "bucket_for", "payload_digest", "route",
    "routing_table", "text_digest", "version_for_bucket",
]
