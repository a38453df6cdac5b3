"""Intel pipeline: dedup, Eq-style priority scoring, triage, reports."""

import math
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rapidguard.intelops import (
    CredibilityRegistry,
    Duplicate,
    EaseFactors,
    EmptyBody,
    EmptySection,
    GenerationFailure,
    INSUFFICIENT_DETAIL,
    IntelPipeline,
    InvalidTransition,
    NotScored,
    OutOfRange,
    PIR,
    PirRegistry,
    canonicalize,
    combine_score,
    compute_ease,
    dedupe_key,
    score_pir,
)
from rapidguard.intelops.models import IntelItem
from rapidguard.ruleforge import parse_rule

DOC = {
    "title": "Novel jailbreak against chat assistants",
    "body": "A report describing a persona-based jailbreak. Ignore previous instructions variants.",
    "origin": "feed",
    "ttps": ["prompt_injection"],
    "affected_models": ["gpt-x"],
    "reported_asr": 0.8,
}


def make_pipeline(**kwargs):
    return IntelPipeline(**kwargs)


def make_item(**overrides) -> IntelItem:
    base = dict(
        id="itm-000001",
        title="t",
        raw_text="b",
        origin="feed",
        ingested_at="2025-06-01T00:00:00+00:00",
        dedupe_key="k",
    )
    base.update(overrides)
    return IntelItem(**base)


# --- dedupe_key -------------------------------------------------------------


def test_dedupe_key_canonicalization():
    assert dedupe_key("A  B", "x") == dedupe_key("a b", "x")
    assert dedupe_key("t", "body one") != dedupe_key("t", "body two")


def test_dedupe_key_stable():
    assert dedupe_key("t", "b") == dedupe_key("t", "b")
    assert len(dedupe_key("t", "b")) == 64  # 256-bit hex


# --- ingest -----------------------------------------------------------------


def test_ingest_byte_identical_duplicate():
    pipe = make_pipeline()
    first = pipe.ingest_item(dict(DOC))
    second = pipe.ingest_item(dict(DOC))
    assert isinstance(second, Duplicate)
    assert second.existing.id == first.id


def test_ingest_whitespace_case_duplicate():
    pipe = make_pipeline()
    first = pipe.ingest_item(dict(DOC))
    variant = dict(DOC)
    variant["title"] = DOC["title"].upper()
    variant["body"] = "  " + DOC["body"].replace(" ", "   ") + "  "
    # oracle: canonicalize-then-hash agrees before we even ingest
    assert dedupe_key(variant["title"], variant["body"]) == dedupe_key(
        DOC["title"], DOC["body"]
    )
    assert canonicalize(variant["body"]) == canonicalize(DOC["body"])
    second = pipe.ingest_item(variant)
    assert isinstance(second, Duplicate)
    assert second.existing.id == first.id


def test_ingest_url_resubmission_duplicate():
    pipe = make_pipeline()
    doc = dict(DOC, url="https://example.org/post")
    pipe.ingest_item(doc)
    changed = dict(doc, body="a competely different body text")
    assert isinstance(pipe.ingest_item(changed), Duplicate)


def test_ingest_empty_body():
    pipe = make_pipeline()
    with pytest.raises(EmptyBody):
        pipe.ingest_item({"title": "t", "body": "   "})
    with pytest.raises(EmptyBody):
        pipe.ingest_item({"body": "content with no title or url"})


def test_ingest_extractor_failure_flags_item():
    class Boom:
        def extract(self, title, body):
            raise RuntimeError("fetch failed")

    pipe = make_pipeline(extractor=Boom())
    item = pipe.ingest_item(dict(DOC))
    assert item.extraction_failed
    assert item.extracted_text is None
    assert item.raw_text  # raw retained for retry


def test_dedup_idempotent_over_all_stored():
    pipe = make_pipeline()
    docs = [dict(DOC), dict(DOC, title="another", body="different body here")]
    for doc in docs:
        pipe.ingest_item(doc)
    before = len(pipe.list_items())
    for doc in docs:
        assert isinstance(pipe.ingest_item(dict(doc)), Duplicate)
    assert len(pipe.list_items()) == before


# --- compute_ease -----------------------------------------------------------


def test_compute_ease_examples():
    assert compute_ease(EaseFactors(5, True, True)) == 5.0
    assert compute_ease(EaseFactors(0, False, False)) == 0.0
    assert math.isclose(compute_ease(EaseFactors(3, True, False)), 8 / 3)


def test_ease_susceptibility_range():
    with pytest.raises(OutOfRange):
        EaseFactors(5.1, True, True)
    with pytest.raises(OutOfRange):
        EaseFactors(-0.1, False, False)


# --- score_pir --------------------------------------------------------------


def _pirs(t_priority: float, m_priority: float) -> list[PIR]:
    return [
        PIR("pir-t", "ttp", "prompt_injection", t_priority),
        PIR("pir-m", "model", "gpt-x", m_priority),
    ]


def test_score_pir_maximum_is_five():
    item = make_item(ttps=["prompt_injection"], affected_models=["gpt-x"])
    assert score_pir(item, _pirs(5, 5), 5, 5) == 5.0
    assert item.pir_score == 5.0


def test_score_pir_zero():
    item = make_item(ttps=["prompt_injection"], affected_models=["gpt-x"])
    assert score_pir(item, _pirs(0, 0), 0, 0) == 0.0


def test_score_pir_direct_arithmetic():
    item = make_item(ttps=["prompt_injection"], affected_models=["gpt-x"])
    assert math.isclose(score_pir(item, _pirs(4, 2), 3, 5), 3.5)


def test_score_pir_unknown_subject_gets_floor():
    item = make_item(ttps=["unheard_of"], affected_models=[])
    score = score_pir(item, _pirs(5, 5), 0, 0)
    assert score == 0.0  # floor default 0 for the ttp, no models -> floor


def test_score_pir_expired_window_excluded():
    item = make_item(ttps=["prompt_injection"])
    windowed = [
        PIR("pir-t", "ttp", "prompt_injection", 5, active_window=("2025-01-01", "2025-03-01"))
    ]
    live = score_pir(item, windowed, 0, 0, on_date=date(2025, 2, 1))
    expired = score_pir(item, windowed, 0, 0, on_date=date(2025, 6, 1))
    assert live == pytest.approx(5 / 3)
    assert expired == 0.0


def test_score_pir_out_of_range_inputs():
    item = make_item()
    with pytest.raises(OutOfRange):
        score_pir(item, [], 5.5, 0)
    with pytest.raises(OutOfRange):
        score_pir(item, [], 0, -1)


@given(
    t=st.floats(0, 5), m=st.floats(0, 5), s=st.floats(0, 5), e=st.floats(0, 5)
)
@settings(max_examples=200, deadline=None)
def test_score_bounds_fuzz(t, m, s, e):
    assert 0.0 <= combine_score(t, m, s, e) <= 5.0


@given(
    base=st.tuples(st.floats(0, 4), st.floats(0, 4), st.floats(0, 4), st.floats(0, 4)),
    bump=st.floats(0.01, 1.0),
    index=st.integers(0, 3),
)
@settings(max_examples=120, deadline=None)
def test_score_monotone_in_each_component(base, bump, index):
    values = list(base)
    lower = combine_score(*values)
    values[index] = min(5.0, values[index] + bump)
    assert combine_score(*values) >= lower


# --- triage -----------------------------------------------------------------


def _scored_item(pipe, doc, score):
    item = pipe.ingest_item(doc)
    item.pir_score = score
    pipe._save(item)
    return item


def test_triage_threshold():
    pipe = make_pipeline()
    high = _scored_item(pipe, dict(DOC), 4.2)
    low = _scored_item(pipe, dict(DOC, title="low", body="other body"), 1.0)
    assert pipe.triage(high.id, 2.5) == "queued"
    assert pipe.triage(low.id, 2.5) == "archived"


def test_triage_requires_score():
    pipe = make_pipeline()
    item = pipe.ingest_item(dict(DOC))
    with pytest.raises(NotScored):
        pipe.triage(item.id, 2.5)


def test_queue_ordering():
    clock = iter(range(100))
    pipe = make_pipeline(clock=lambda: next(clock))
    a = _scored_item(pipe, dict(DOC, title="a", body="body a"), 3.0)
    b = _scored_item(pipe, dict(DOC, title="b", body="body b"), 4.2)
    pipe.triage(a.id, 2.5)
    pipe.triage(b.id, 2.5)
    assert [i.pir_score for i in pipe.queue()] == [4.2, 3.0]


@given(score=st.floats(0, 5), threshold=st.floats(0, 5))
@settings(max_examples=100, deadline=None)
def test_triage_is_threshold_function(score, threshold):
    pipe = make_pipeline()
    item = _scored_item(pipe, dict(DOC), score)
    outcome = pipe.triage(item.id, threshold)
    assert (outcome == "queued") == (score >= threshold)


def test_status_machine_rejects_illegal_edges():
    pipe = make_pipeline()
    item = _scored_item(pipe, dict(DOC), 4.0)
    with pytest.raises(InvalidTransition):
        pipe.begin_review(item.id)  # new -> in_review is not an edge
    pipe.triage(item.id, 2.5)
    pipe.begin_review(item.id)
    with pytest.raises(InvalidTransition):
        pipe.triage(item.id, 2.5)  # in_review -> queued not allowed


# --- reports ----------------------------------------------------------------


def _reviewed_item(pipe, ease=None, **doc_overrides):
    doc = dict(DOC)
    doc.update(doc_overrides)
    item = _scored_item(pipe, doc, 4.0)
    if ease is not None:
        pipe.set_ease(item.id, ease)
    pipe.triage(item.id, 2.5)
    pipe.begin_review(item.id)
    return pipe.get_item(item.id)


def test_report_contains_asr():
    pipe = make_pipeline()
    item = _reviewed_item(pipe)
    report = pipe.generate_report(item.id)
    assert "0.8" in report.sections["potential_impact"]
    assert report.author == "generator"
    assert all(report.sections[s] for s in report.sections)


def test_report_insufficient_detail_marker():
    class EmptyExtractor:
        def extract(self, title, body):
            return ""

    pipe = make_pipeline(extractor=EmptyExtractor())
    item = _reviewed_item(pipe)
    report = pipe.generate_report(item.id)
    assert report.sections["attack_example"] == INSUFFICIENT_DETAIL


def test_regeneration_increments_revision():
    pipe = make_pipeline()
    item = _reviewed_item(pipe)
    r1 = pipe.generate_report(item.id)
    r2 = pipe.generate_report(item.id)
    assert (r1.revision, r2.revision) == (1, 2)


def test_report_requires_in_review():
    pipe = make_pipeline()
    item = _scored_item(pipe, dict(DOC), 4.0)
    with pytest.raises(InvalidTransition):
        pipe.generate_report(item.id)


def test_generation_failure_keeps_state():
    class Flaky:
        def generate(self, item):
            raise RuntimeError("llm down")

    pipe = make_pipeline(generator=Flaky())
    item = _reviewed_item(pipe)
    with pytest.raises(GenerationFailure):
        pipe.generate_report(item.id)
    assert pipe.get_item(item.id).status == "in_review"


def test_recommended_signature_when_opportunity():
    pipe = make_pipeline()
    item = _reviewed_item(pipe, ease=EaseFactors(3.75, True, False))
    report = pipe.generate_report(item.id)
    assert report.recommended_signature is not None
    rule = parse_rule(report.recommended_signature)  # draft must be valid
    assert rule.meta_dict()["category"] == "prompt_injection"


def test_finalize_edits_one_section():
    pipe = make_pipeline()
    item = _reviewed_item(pipe)
    generated = pipe.generate_report(item.id)
    final = pipe.finalize_report(item.id, {"threat_summary": "Reviewed summary."})
    assert final.sections["threat_summary"] == "Reviewed summary."
    for section in generated.sections:
        if section != "threat_summary":
            assert final.sections[section] == generated.sections[section]
    assert final.revision == generated.revision + 1
    assert final.author == "analyst"
    assert pipe.get_item(item.id).status == "reported"


def test_finalize_blank_section_rejected():
    pipe = make_pipeline()
    item = _reviewed_item(pipe)
    pipe.generate_report(item.id)
    with pytest.raises(EmptySection):
        pipe.finalize_report(item.id, {"threat_summary": "   "})


def test_finalize_twice_keeps_both_revisions():
    pipe = make_pipeline()
    item = _reviewed_item(pipe)
    pipe.generate_report(item.id)
    pipe.finalize_report(item.id, {"threat_summary": "first pass"})
    pipe.finalize_report(item.id, {"threat_summary": "second pass"})
    revisions = pipe.reports(item.id)
    assert [r.revision for r in revisions] == [1, 2, 3]
    assert revisions[1].sections["threat_summary"] == "first pass"
    assert revisions[2].sections["threat_summary"] == "second pass"


def test_finalize_revision_conflict():
    from rapidguard.intelops import RevisionConflict

    pipe = make_pipeline()
    item = _reviewed_item(pipe)
    pipe.generate_report(item.id)
    pipe.finalize_report(item.id, {"threat_summary": "a"})
    with pytest.raises(RevisionConflict):
        pipe.finalize_report(item.id, {"threat_summary": "b"}, base_revision=1)


# --- registries -------------------------------------------------------------


def test_pir_registry_round_trip(tmp_path):
    reg = PirRegistry(
        [PIR("p1", "ttp", "prompt_injection", 4.5, active_window=("2025-01-01", "2025-04-01"))],
        floor=0.5,
    )
    path = tmp_path / "pirs.json"
    reg.to_file(path)
    loaded = PirRegistry.from_file(path)
    assert loaded.floor == 0.5
    assert loaded.pirs[0].active_window == ("2025-01-01", "2025-04-01")


def test_credibility_registry(tmp_path):
    reg = CredibilityRegistry({"arxiv": 1.5, "peer_reviewed": 4.0}, default=2.0)
    path = tmp_path / "cred.json"
    reg.to_file(path)
    loaded = CredibilityRegistry.from_file(path)
    assert loaded.credibility("arxiv") == 1.5
    assert loaded.credibility("unknown_blog") == 2.0
    assert loaded.credibility(None) == 2.0
