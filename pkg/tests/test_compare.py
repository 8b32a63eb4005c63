"""Cross-viewpoint comparison: alignment, commonalities, differences, starts."""

import datetime as dt
import itertools

import pytest

from narramine import fixtures
from narramine.binder import bind_narrative
from narramine.compare import (
    align_events,
    commonalities,
    comparison_report,
    differences,
    narrative_events,
    narrative_start,
)
from narramine.llm import MockBackend
from narramine.miner import mine
from narramine.model import (
    EventNode,
    Narrative,
    NarrativeStore,
    TimeSpec,
    Viewpoint,
)
from narramine.semantics import FixtureEmbeddingBackend


@pytest.fixture(scope="module")
def mined():
    """The demo corpus mined under all three viewpoints, in one store."""
    store = NarrativeStore.with_defaults()
    docs = fixtures.demo_documents()
    backend = MockBackend(fixtures.demo_mock_script())
    embed = FixtureEmbeddingBackend(fixtures.demo_embedding_table())
    ids = {}
    for vp in ("US", "UK", "RU"):
        nid, _ = mine(fixtures.demo_mine_config(vp), store, docs, backend, embed)
        ids[vp] = nid
    return store, ids, embed


def labels(store, keys):
    return {store.events[e].label for _, e in keys}


# ---------------------------------------------------------------------------
# alignment
# ---------------------------------------------------------------------------

def test_align_events_similarity_pairs(mined):
    store, ids, embed = mined
    alignment = align_events(store, ids["US"], ids["RU"], embed)
    paired = {(store.events[p.a].label, store.events[p.b].label)
              for p in alignment.pairs}
    assert paired == {("Invasion of Iraq", "Invasion of Iraq"),
                      ("Abu Ghraib prison scandal", "Abu Ghraib prisoner abuse")}
    assert all(p.basis == "similarity" and p.score >= 0.8 for p in alignment.pairs)


def test_align_events_symmetric_pairing(mined):
    store, ids, embed = mined
    ab = align_events(store, ids["UK"], ids["RU"], embed)
    ba = align_events(store, ids["RU"], ids["UK"], embed)
    assert {(p.a, p.b) for p in ab.pairs} == {(p.b, p.a) for p in ba.pairs}


def test_align_events_prefers_shared_binding(mined):
    store, ids, embed = mined
    snapshot_obj = fixtures.demo_kg_snapshot_obj()
    from narramine.binder import KgSnapshot
    snapshot = KgSnapshot.from_obj(snapshot_obj)
    bind_narrative(store, ids["US"], snapshot)
    bind_narrative(store, ids["RU"], snapshot)
    alignment = align_events(store, ids["US"], ids["RU"], embed)
    bases = {store.events[p.a].label: p.basis for p in alignment.pairs}
    assert bases["Invasion of Iraq"] == "shared-binding"
    assert bases["Abu Ghraib prison scandal"] == "shared-binding"


def test_align_one_to_one_under_duplicates():
    store = NarrativeStore.with_defaults()
    store.add_viewpoint(Viewpoint(id="V"))
    table = {"same": [1.0, 0.0], "also same": [0.99, 0.01]}
    embed = FixtureEmbeddingBackend(table)
    for nid, labels_ in (("n1", ["same", "also same"]), ("n2", ["same"])):
        n = Narrative(id=nid, narrator="V")
        store.add_narrative(n)
        for i, lab in enumerate(labels_):
            eid = f"{nid}#e{i}"
            store.add_event(EventNode(id=eid, label=lab))
            n.nodes.add(eid)
    alignment = align_events(store, "n1", "n2", embed)
    # the single n2 event can absorb only one of the two near-identical n1 events
    assert len(alignment.pairs) == 1
    assert alignment.pairs[0].a == "n1#e0"  # exact match outranks near match


# ---------------------------------------------------------------------------
# commonalities and differences
# ---------------------------------------------------------------------------

def test_commonalities_across_three_viewpoints(mined):
    store, ids, embed = mined
    groups = commonalities(store, list(ids.values()), embed)
    assert len(groups) == 2
    group_labels = sorted(sorted(labels(store, g)) for g in groups)
    assert group_labels == [
        ["Abu Ghraib prison abuse", "Abu Ghraib prison scandal",
         "Abu Ghraib prisoner abuse"],
        ["Invasion of Iraq"],
    ]
    for g in groups:
        assert {nid for nid, _ in g} == set(ids.values())


def test_commonalities_permutation_invariant(mined):
    store, ids, embed = mined
    base = commonalities(store, list(ids.values()), embed)
    for perm in itertools.permutations(ids.values()):
        assert commonalities(store, list(perm), embed) == base


def test_commonalities_single_narrative_lists_every_event(mined):
    store, ids, embed = mined
    groups = commonalities(store, [ids["RU"]], embed)
    assert [g[0][1] for g in groups] == narrative_events(store, ids["RU"])


def test_differences_uk_vs_ru(mined):
    store, ids, embed = mined
    unique_uk, unique_ru = differences(store, ids["UK"], ids["RU"], embed)
    assert {store.events[e].label for e in unique_uk} == {
        "Bush declares major combat over", "Hutton Inquiry"}
    assert {store.events[e].label for e in unique_ru} == {
        "Colin Powell speech at the UN", "Use of depleted uranium munitions"}


def test_differences_partition_identity(mined):
    store, ids, embed = mined
    for n1, n2 in itertools.combinations(ids.values(), 2):
        alignment = align_events(store, n1, n2, embed)
        u1, u2 = differences(store, n1, n2, embed)
        assert len(alignment.pairs) + len(u1) == len(narrative_events(store, n1))
        assert len(alignment.pairs) + len(u2) == len(narrative_events(store, n2))


def test_differences_self_is_empty(mined):
    store, ids, embed = mined
    assert differences(store, ids["US"], ids["US"], embed) == (set(), set())


# ---------------------------------------------------------------------------
# narrative_start
# ---------------------------------------------------------------------------

def test_narrative_starts_differ_per_viewpoint(mined):
    store, ids, _ = mined
    starts = {vp: store.events[narrative_start(store, nid)].label
              for vp, nid in ids.items()}
    assert starts == {"US": "September 11 attacks",
                      "UK": "Invasion of Iraq",
                      "RU": "Colin Powell speech at the UN"}


def start_store():
    store = NarrativeStore.with_defaults()
    store.add_viewpoint(Viewpoint(id="V"))
    return store


def add_events(store, nid, specs):
    n = Narrative(id=nid, narrator="V")
    store.add_narrative(n)
    out = []
    for i, (label, time) in enumerate(specs):
        eid = f"{nid}#e{i}"
        store.add_event(EventNode(id=eid, label=label, time=time))
        n.nodes.add(eid)
        out.append(eid)
    return out


def test_narrative_start_single_event():
    store = start_store()
    (only,) = add_events(store, "n", [("Solo", TimeSpec.unknown())])
    assert narrative_start(store, "n") == only


def test_narrative_start_unknown_dates_without_edges_is_ambiguous():
    store = start_store()
    add_events(store, "n", [("A", TimeSpec.unknown()), ("B", TimeSpec.unknown())])
    assert narrative_start(store, "n") is None


def test_narrative_start_tied_earliest_is_ambiguous():
    store = start_store()
    t = TimeSpec.instant(dt.date(2003, 3, 20))
    add_events(store, "n", [("A", t), ("B", t)])
    assert narrative_start(store, "n") is None


def test_narrative_start_earliest_dated_without_edges():
    store = start_store()
    ids = add_events(store, "n", [("Late", TimeSpec.year(2004)),
                                  ("Early", TimeSpec.year(2002)),
                                  ("Undated", TimeSpec.unknown())])
    assert narrative_start(store, "n") == ids[1]


def test_narrative_start_respects_after_orientation():
    store = start_store()
    ids = add_events(store, "n", [("Second", TimeSpec.unknown()),
                                  ("First", TimeSpec.unknown())])
    # stored as (later, "happened after", earlier): e1 is chronologically first
    store.add_narrative_edge("n", ids[0], "happened after", ids[1])
    assert narrative_start(store, "n") == ids[1]


def test_narrative_start_ignores_non_temporal_edges():
    store = start_store()
    ids = add_events(store, "n", [("A", TimeSpec.year(2003)),
                                  ("B", TimeSpec.year(2004))])
    store.add_narrative_edge("n", ids[0], "associated with", ids[1])
    assert narrative_start(store, "n") == ids[0]


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def test_comparison_report_structure(mined):
    store, ids, embed = mined
    report = comparison_report(store, list(ids.values()), embed)
    assert report["narratives"] == sorted(ids.values())
    assert len(report["commonalities"]) == 2
    assert report["sim_threshold"] == 0.8
    assert report["starts"][ids["US"]]["label"] == "September 11 attacks"
    ru_unique = {u["label"] for u in report["unique_events"][ids["RU"]]}
    assert ru_unique == {"Colin Powell speech at the UN",
                         "Use of depleted uranium munitions"}
