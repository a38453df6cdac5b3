"""Property tests for scanning: oracle equivalence, determinism,
monotonicity, nocase soundness, fingerprint identity."""

import random
import string
from concurrent.futures import ThreadPoolExecutor

from hypothesis import given, settings
from hypothesis import strategies as st

from rapidguard.ruleforge import compile_package, parse_rule, scan_bytes
from rapidguard.ruleforge.scanner import fold_ascii

from . import genrules, oracle


def production_matchset(rules, data):
    pkg = compile_package(rules, "prop", 1)
    return {
        m.rule_name: {sid: [tuple(s) for s in spans] for sid, spans in m.matched.items()}
        for m in scan_bytes(pkg, data)
    }


def oracle_matchset(rules, data):
    return {
        name: {sid: [tuple(s) for s in spans] for sid, spans in matched.items()}
        for name, matched in oracle.naive_scan(rules, data).items()
    }


def test_oracle_equivalence_random_rules():
    rng = random.Random(20250810)
    for trial in range(150):
        rules = [genrules.gen_rule(rng, f"g{trial}_{i}") for i in range(rng.randint(1, 3))]
        for _ in range(4):
            data = genrules.gen_input(rng, rules, max_len=1024)
            assert production_matchset(rules, data) == oracle_matchset(rules, data), (
                f"disagreement on trial {trial}: "
                f"{[r.name for r in rules]} input={data!r}"
            )


def test_scan_identical_across_thread_counts():
    rng = random.Random(7)
    rules = [genrules.gen_rule(rng, f"t{i}") for i in range(4)]
    pkg = compile_package(rules, "prop", 1)
    inputs = [genrules.gen_input(rng, rules) for _ in range(40)]

    def scan_all(workers):
        if workers == 1:
            return [scan_bytes(pkg, d) for d in inputs]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda d: scan_bytes(pkg, d), inputs))

    serial = [[m.to_dict() for m in ms] for ms in scan_all(1)]
    threaded = [[m.to_dict() for m in ms] for ms in scan_all(4)]
    assert serial == threaded


@given(
    needle=st.text(alphabet=string.ascii_lowercase + " ", min_size=1, max_size=12),
    prefix=st.text(max_size=30),
    suffix=st.text(max_size=30),
)
@settings(max_examples=60, deadline=None)
def test_text_match_monotone_under_superstring(needle, prefix, suffix):
    rule = parse_rule(
        'rule m { meta: description="d" category="c" severity=1 created="2025-01-01" '
        f'strings: $a = "{needle}" condition: $a }}'
    )
    pkg = compile_package([rule], "prop", 1)
    base = needle.encode("utf-8")
    assert scan_bytes(pkg, base)
    bigger = prefix.encode("utf-8") + base + suffix.encode("utf-8")
    assert scan_bytes(pkg, bigger)


@given(data=st.binary(max_size=200), seed=st.integers(0, 2**16))
@settings(max_examples=60, deadline=None)
def test_nocase_invariant_under_case_mapping(data, seed):
    rule = parse_rule(
        'rule n { meta: description="d" category="c" severity=1 created="2025-01-01" '
        'strings: $a = "Attack Vector" nocase $r = /pay(load|pal)s?/ nocase '
        "condition: any of them }"
    )
    pkg = compile_package([rule], "prop", 1)
    rng = random.Random(seed)
    remapped = bytes(
        b ^ 0x20 if (0x41 <= b <= 0x5A or 0x61 <= b <= 0x7A) and rng.random() < 0.5 else b
        for b in data
    )

    def matchset(d):
        return {
            m.rule_name: {s: v for s, v in m.matched.items()} for m in scan_bytes(pkg, d)
        }

    def key_of(spans_by_rule):
        # compare on (offset, length) sets only; bytes differ by case
        return {
            rule: {s: tuple(v) for s, v in spans.items()}
            for rule, spans in spans_by_rule.items()
        }

    assert key_of(matchset(data)) == key_of(matchset(remapped))
    assert fold_ascii(data).lower() == fold_ascii(remapped).lower()


def test_fingerprint_uniqueness_over_random_edits():
    rng = random.Random(99)
    seen = {}
    for i in range(80):
        rule = genrules.gen_rule(rng, f"fp{i}")
        pkg = compile_package([rule], "prop", 1)
        src = pkg.rules[0].source
        assert pkg.fingerprint not in seen or seen[pkg.fingerprint] == src
        seen[pkg.fingerprint] = src
