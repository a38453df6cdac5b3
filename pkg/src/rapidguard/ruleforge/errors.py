"""Exceptions raised by rule parsing, compilation, and validation."""

from __future__ import annotations


class RuleError(Exception):
    """Base class for all rule-language errors."""


class RuleSyntaxError(RuleError):
    """Malformed rule source. Carries the 1-based line/column and, when
    known, the tokens that would have been accepted at that point."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        detail = f"line {line}, column {col}: {message}"
        if expected:
            detail += f" (expected {', '.join(expected)})"
        super().__init__(detail)
        self.line = line
        self.col = col
        self.expected = expected


class UndeclaredString(RuleError):
    def __init__(self, rule_name: str, string_id: str):
        super().__init__(
            f"rule {rule_name!r}: condition references undeclared string {string_id}"
        )
        self.rule_name = rule_name
        self.string_id = string_id


class MissingMeta(RuleError):
    def __init__(self, rule_name: str, keys: tuple[str, ...]):
        super().__init__(f"rule {rule_name!r}: missing required meta keys {', '.join(keys)}")
        self.rule_name = rule_name
        self.keys = keys


class InvalidMeta(RuleError):
    """Required meta key present but with a bad type or value."""


class InvalidHex(RuleError):
    pass


class InvalidRegex(RuleError):
    pass


class DuplicateRuleName(RuleError):
    def __init__(self, name: str):
        super().__init__(f"duplicate rule name {name!r}")
        self.name = name


class NonMonotonicVersion(RuleError):
    def __init__(self, package_id: str, version: int, latest: int):
        super().__init__(
            f"package {package_id!r}: version {version} is not greater than "
            f"existing version {latest}"
        )
        self.package_id = package_id
        self.version = version
        self.latest = latest


class EmptyCorpus(RuleError):
    pass
