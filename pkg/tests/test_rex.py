"""Regex dialect engine: parsing, rejection of off-dialect syntax, and
longest-match-at-offset semantics."""

import pytest

from rapidguard.ruleforge import rex


def spans(pattern, data, nocase=False):
    return rex.compile_pattern(pattern, nocase=nocase).find_all(data)


def test_literal_match():
    assert spans("abc", b"xxabcxx") == [(2, 3)]


def test_all_offsets_reported_overlapping():
    assert spans("aa", b"aaaa") == [(0, 2), (1, 2), (2, 2)]


def test_longest_match_at_offset():
    # POSIX-style longest, not first-alternative
    assert spans("a|ab", b"ab") == [(0, 2)]
    assert spans("ab|a", b"ab") == [(0, 2)]


def test_repetition_longest():
    assert spans("a+", b"aaa") == [(0, 3), (1, 2), (2, 1)]


def test_bounded_repetition():
    assert spans("a{2,3}", b"aaaa") == [(0, 3), (1, 3), (2, 2)]
    assert spans("a{2}", b"aaa") == [(0, 2), (1, 2)]


def test_class_and_shorthand():
    assert spans(r"[a-c]\d", b"zb4") == [(1, 2)]
    assert spans(r"\w+", b"!ab!") == [(1, 2), (2, 1)]


def test_negated_class():
    assert spans("[^a]", b"ab") == [(1, 1)]


def test_dot_excludes_newline():
    assert spans("a.c", b"a\ncabc") == [(3, 3)]


def test_alternation_groups():
    assert spans("(foo|ba(r|z))!", b"baz! foo!") == [(0, 4), (5, 4)]


def test_escapes():
    assert spans(r"\x41\.", b"A.") == [(0, 2)]
    assert spans(r"a\|b", b"a|b") == [(0, 3)]


def test_nocase_folding():
    assert spans("abc", b"ABC", nocase=True) == [(0, 3)]
    assert spans("[a-c]+", b"AbC", nocase=True) == [(0, 3), (1, 2), (2, 1)]


def test_utf8_literal_expands_to_bytes():
    assert spans("é", "xéx".encode("utf-8")) == [(1, 2)]


def test_empty_matchable_rejected():
    with pytest.raises(rex.RegexSyntaxError, match="empty"):
        rex.compile_pattern("a*")
    with pytest.raises(rex.RegexSyntaxError, match="empty"):
        rex.compile_pattern("(a?)(b?)")


@pytest.mark.parametrize(
    "pattern",
    [
        "a**",
        "a*?",
        "(?=x)a",
        "(?P<n>a)",
        r"(a)\1",
        r"\bword",
        "^start",
        "end$",
        "[z-a]",
        "a{3,1}",
        "a{,}",
        "(unclosed",
        "a{1,999}",
        r"bad\q",
    ],
)
def test_off_dialect_rejected(pattern):
    with pytest.raises(rex.RegexSyntaxError):
        rex.compile_pattern(pattern)


def test_noncapturing_group_accepted():
    assert spans("(?:ab)+", b"abab") == [(0, 4), (2, 2)]


def test_pathological_pattern_stays_fast():
    # classic exponential-backtracking shape; must complete instantly
    data = b"a" * 200
    assert spans("(a+)+b", data) == []
