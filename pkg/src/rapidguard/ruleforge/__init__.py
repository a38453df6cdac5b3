"""Signature rule language: parser, compiler, scanner, validation, diff."""

from .diff import DeltaReport, diff_packages
from .errors import (
    DuplicateRuleName,
    EmptyCorpus,
    InvalidHex,
    InvalidMeta,
    InvalidRegex,
    MissingMeta,
    NonMonotonicVersion,
    RuleError,
    RuleSyntaxError,
    UndeclaredString,
)
from .model import (
    And,
    CountCmp,
    MatchResult,
    Not,
    OfExpr,
    Or,
    Rule,
    StringPattern,
    StringRef,
)
from .package import (
    CompiledRule,
    PackageRegistry,
    RulePackage,
    compile_package,
    compile_rule,
    from_manifest,
    load_manifest,
    save_manifest,
    to_manifest,
)
from .parser import parse_rule, parse_rules, render_rule
from .scanner import evaluate_condition, scan_bytes, scan_text
from .validate import PerfBudget, ValidationReport, validate_package

__all__ = [
    "And", "CompiledRule", "CountCmp", "DeltaReport", "DuplicateRuleName",
    "EmptyCorpus", "InvalidHex", "InvalidMeta", "InvalidRegex", "MatchResult",
    "MissingMeta", "NonMonotonicVersion", "Not", "OfExpr", "Or", "PackageRegistry",
    "PerfBudget", "Rule", "RuleError", "RulePackage", "RuleSyntaxError",
    "StringPattern", "StringRef", "UndeclaredString", "ValidationReport",
    "compile_package", "compile_rule", "diff_packages", "evaluate_condition",
    "from_manifest", "load_manifest", "parse_rule", "parse_rules", "render_rule",
    "save_manifest", "scan_bytes", "scan_text", "to_manifest", "validate_package",
]
