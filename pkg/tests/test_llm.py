"""LLM plumbing: templates, mock/cached backends, and response parsing."""

import datetime as dt

import pytest

from narramine import llm
from narramine.corpus import Document
from narramine.errors import (
    BackendUnavailable,
    EmptyTimeline,
    UnknownPredicate,
    UnparseableAnswer,
)
from narramine.llm import (
    CachedBackend,
    MockBackend,
    ResponseCache,
    detect_event,
    extract_timeline_raw,
    infer_relation,
    label_events,
    parse_labeled_event,
    parse_time_hint,
    prompt_key,
    strip_list_marker,
    synthesize_label,
    verify_timeline,
)
from narramine.model import TimeSpec


def doc(body="Something happened in the town square."):
    return Document(id="d1", viewpoint="V", outlet="", url="u", title="t", body=body)


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("line,expected", [
    ("- item", "item"),
    ("* item", "item"),
    ("3. item", "item"),
    ("(2) item", "item"),
    ("12) item", "item"),
    ("plain", "plain"),
])
def test_strip_list_marker(line, expected):
    assert strip_list_marker(line) == expected


@pytest.mark.parametrize("text,expected", [
    ("March 20, 2003", TimeSpec.instant(dt.date(2003, 3, 20))),
    ("20th of March 2003", TimeSpec.month(2003, 3)),  # ordinal day not parsed
    ("April 2003", TimeSpec.month(2003, 4)),
    ("2003-2011", TimeSpec.year_span(2003, 2011)),
    ("in 1999", TimeSpec.year(1999)),
    ("sometime soon", TimeSpec.unknown()),
    ("midday", TimeSpec.unknown()),
])
def test_parse_time_hint(text, expected):
    assert parse_time_hint(text) == expected


def test_parse_labeled_event_suffix_time():
    label, ts = parse_labeled_event(
        "1. The army moved. -- Invasion of Iraq (March 20, 2003)")
    assert label == "Invasion of Iraq"
    assert ts == TimeSpec.instant(dt.date(2003, 3, 20))


def test_parse_labeled_event_prefix_date_stays_in_label():
    label, ts = parse_labeled_event("May 2017: ransomware spreads worldwide")
    assert label == "May 2017: ransomware spreads worldwide"
    assert ts == TimeSpec.month(2017, 5)


def test_parse_labeled_event_no_time():
    label, ts = parse_labeled_event("2. A meeting took place")
    assert label == "A meeting took place"
    assert ts == TimeSpec.unknown()


# ---------------------------------------------------------------------------
# backends and cache
# ---------------------------------------------------------------------------

def test_mock_backend_key_then_default_then_error():
    backend = MockBackend({"event_detection": {prompt_key("exact"): "Yes",
                                               "default": "No"}})
    assert backend.complete("event_detection", "exact") == "Yes"
    assert backend.complete("event_detection", "anything else") == "No"
    with pytest.raises(BackendUnavailable):
        backend.complete("label_synthesis", "no entry for this template")


def test_response_cache_memory_and_disk(tmp_path):
    cache = ResponseCache(tmp_path / "cache")
    key = ResponseCache.key("t", "p", "m")
    assert cache.get(key) is None
    cache.put(key, "value")
    assert cache.get(key) == "value"
    # a fresh cache over the same directory sees the persisted entry
    assert ResponseCache(tmp_path / "cache").get(key) == "value"
    assert cache.stats()["disk_entries"] == 1
    assert cache.clear() >= 1
    assert cache.get(key) is None


def test_cache_keys_distinguish_all_inputs():
    base = ResponseCache.key("t", "p", "m")
    assert ResponseCache.key("t2", "p", "m") != base
    assert ResponseCache.key("t", "p2", "m") != base
    assert ResponseCache.key("t", "p", "m2") != base


class CountingBackend:
    model_name = "counting"

    def __init__(self, response="ok"):
        self.calls = 0
        self.response = response

    def complete(self, template_name, prompt):
        self.calls += 1
        return self.response


def test_cached_backend_hits_bypass_inner():
    inner = CountingBackend()
    backend = CachedBackend(inner, ResponseCache())
    assert backend.complete("t", "p") == "ok"
    assert backend.complete("t", "p") == "ok"
    assert inner.calls == 1
    backend.complete("t", "other prompt")
    assert inner.calls == 2


# ---------------------------------------------------------------------------
# prompted sub-tasks
# ---------------------------------------------------------------------------

def scripted(template, prompt, response, **extra):
    script = {template: {prompt_key(prompt): response}}
    for name, entries in extra.items():
        script.setdefault(name, {}).update(entries)
    return MockBackend(script)


def test_detect_event_yes_no_and_unparseable():
    d = doc()
    span = TimeSpec.year_span(2001, 2005)
    prompt = llm.EVENT_DETECTION.format(text=d.body, event="War",
                                        timespan="2001 to 2005", parent_clause="")
    assert detect_event(scripted("event_detection", prompt, "Yes."), d, "War", span)
    assert not detect_event(scripted("event_detection", prompt, "no"), d, "War", span)
    with pytest.raises(UnparseableAnswer):
        detect_event(scripted("event_detection", prompt, "maybe?"), d, "War", span)


def test_detect_event_parent_clause_changes_prompt():
    d = doc()
    span = TimeSpec.year_span(2001, 2005)
    clause = llm.PARENT_CLAUSE.format(event="Battle", parent_event="War")
    prompt = llm.EVENT_DETECTION.format(text=d.body, event="Battle",
                                        timespan="2001 to 2005",
                                        parent_clause=clause)
    backend = scripted("event_detection", prompt, "Yes")
    assert detect_event(backend, d, "Battle", span, parent_event="War")
    with pytest.raises(BackendUnavailable):  # un-scripted prompt without clause
        detect_event(backend, d, "Battle", span)


def test_extract_timeline_strips_markers_and_rejects_empty():
    d = doc()
    prompt = llm.TIMELINE_EXTRACTION.format(text=d.body, event="War")
    backend = scripted("timeline_extraction", prompt, "1. First\n\n- Second\n")
    assert extract_timeline_raw(backend, d, "War") == ["First", "Second"]
    with pytest.raises(EmptyTimeline):
        extract_timeline_raw(scripted("timeline_extraction", prompt, "\n \n"),
                             d, "War")


def test_label_events_pads_short_responses():
    sentences = ["The army moved in March 20, 2003.", "Another thing."]
    prompt = llm.EVENT_LABELING.format(
        examples=llm._labeling_examples(),
        sentences="\n".join(f"{i + 1}. {s}" for i, s in enumerate(sentences)))
    backend = scripted("event_labeling", prompt,
                       "1. The army moved in March 20, 2003. -- Invasion (March 2003)")
    labeled = label_events(backend, sentences)
    assert labeled[0] == ("Invasion", TimeSpec.month(2003, 3))
    # missing line: the raw sentence is kept, with a best-effort time parse
    assert labeled[1] == ("Another thing.", TimeSpec.unknown())


def test_verify_timeline_drops_unmentioned_and_out_of_span():
    d = doc()
    labeled = [("Invasion", TimeSpec.year(2003)),
               ("Hallucinated rally", TimeSpec.unknown()),
               ("Gulf War", TimeSpec.year(1991)),
               ("Undated meeting", TimeSpec.unknown())]
    prompt = llm.TIMELINE_VERIFICATION.format(
        text=d.body, examples=llm._verification_examples(),
        labels="\n".join(f"{i + 1}. {l}" for i, (l, _) in enumerate(labeled)))
    backend = scripted("timeline_verification", prompt, "1. yes\n2. no\n3. yes\n4. yes")
    kept = verify_timeline(backend, labeled, d, TimeSpec.year_span(2001, 2005))
    assert [l for l, _ in kept] == ["Invasion", "Undated meeting"]


def test_synthesize_label_singleton_identity_no_llm_call():
    inner = CountingBackend()
    label, hull = synthesize_label(inner, [("Solo event", TimeSpec.year(2003))])
    assert (label, hull) == ("Solo event", TimeSpec.year(2003))
    assert inner.calls == 0


def test_synthesize_label_merges_member_times():
    members = [("Invasion begins", TimeSpec.instant(dt.date(2003, 3, 20))),
               ("Invasion starts", TimeSpec.instant(dt.date(2003, 3, 21)))]
    prompt = llm.LABEL_SYNTHESIS.format(labels="- Invasion begins\n- Invasion starts")
    backend = scripted("label_synthesis", prompt, "Invasion of Iraq\nextra line")
    label, hull = synthesize_label(backend, members)
    assert label == "Invasion of Iraq"
    assert hull == TimeSpec.interval(dt.date(2003, 3, 20), dt.date(2003, 3, 21))


def relation_prompt(a, b, candidates="happened after"):
    return llm.RELATION_INFERENCE.format(
        a_label=a[0], a_time=llm.render_timespan(a[1]),
        b_label=b[0], b_time=llm.render_timespan(b[1]), candidates=candidates)


def test_infer_relation_answers():
    a = ("Speech", TimeSpec.instant(dt.date(2003, 2, 5)))
    b = ("Invasion", TimeSpec.instant(dt.date(2003, 3, 20)))
    prompt = relation_prompt(a, b)
    assert infer_relation(scripted("relation_inference", prompt,
                                   "Happened After."), a, b) == "happened after"
    assert infer_relation(scripted("relation_inference", prompt, "none"), a, b) is None
    with pytest.raises(UnknownPredicate):
        infer_relation(scripted("relation_inference", prompt, "follows from"), a, b)


def test_infer_relation_is_irreflexive_on_labels():
    a = ("Same label", TimeSpec.year(2003))
    b = ("same LABEL", TimeSpec.year(2004))
    assert infer_relation(CountingBackend(), a, b) is None


def test_render_timespan():
    assert llm.render_timespan(TimeSpec.year_span(2001, 2005)) == "2001 to 2005"
    assert llm.render_timespan(TimeSpec.year(2003)) == "2003"
    assert llm.render_timespan(TimeSpec.instant(dt.date(2003, 3, 20))) == "2003-03-20"
    assert llm.render_timespan(TimeSpec.unknown()) == "time unknown"
    assert llm.render_timespan(
        TimeSpec.interval(dt.date(2003, 1, 2), dt.date(2003, 2, 3))
    ) == "2003-01-02 to 2003-02-03"
