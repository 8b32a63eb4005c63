"""Deterministic demo fixtures: a 3-viewpoint corpus, a scripted mock LLM,
a fixture embedding table, and KG snapshots.

The mock script is generated by rendering the exact prompts the mining
pipeline will issue, so a fixture mining run is fully reproducible.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path

from . import llm
from .binder import KgEntity, KgSnapshot
from .corpus import Document, document_id
from .miner import MineConfig
from .model import EventNode, Narrative, NarrativeStore, TimeSpec, Viewpoint

EVENT_NAME = "Iraq War"
TIMESPAN = TimeSpec.year_span(2001, 2005)
VIEWPOINTS = ("RU", "UK", "US")


# ---------------------------------------------------------------------------
# demo corpus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Mention:
    sentence: str
    label: str
    time_text: str | None
    verified: bool = True


_MENTIONS = {
    "sept11": _Mention(
        "Hijacked airliners struck the World Trade Center and the Pentagon "
        "on the morning of September 11, 2001.",
        "September 11 attacks", "September 11, 2001"),
    "invasion_us": _Mention(
        "American and allied forces crossed into Iraq from Kuwait on "
        "March 20, 2003.",
        "Invasion of Iraq", "March 20, 2003"),
    "mission": _Mention(
        "President Bush declared the end of major combat operations aboard "
        "an aircraft carrier on May 1, 2003.",
        "Mission Accomplished speech", "May 1, 2003"),
    "capture_us": _Mention(
        "Soldiers pulled Saddam Hussein from a hideout near Tikrit on "
        "December 13, 2003.",
        "Capture of Saddam Hussein", "December 13, 2003"),
    "abu_us": _Mention(
        "Photographs of prisoner mistreatment at a Baghdad jail were "
        "broadcast on April 28, 2004.",
        "Abu Ghraib prison scandal", "April 28, 2004"),
    "halluc": _Mention(
        "A crowd reportedly gathered outside the city library.",
        "Gathering at the city library", None, verified=False),
    "gulf": _Mention(
        "The Gulf War drove Iraqi forces out of Kuwait in 1991.",
        "Gulf War", "1991"),
    "invasion_uk": _Mention(
        "British and American troops entered Iraq in the spring of 2003.",
        "Invasion of Iraq", "2003"),
    "bush": _Mention(
        "The American president announced that major combat operations were "
        "over on May 1, 2003.",
        "Bush declares major combat over", "May 1, 2003"),
    "hutton": _Mention(
        "An inquiry led by Lord Hutton into the death of a government "
        "scientist opened on August 1, 2003.",
        "Hutton Inquiry", "August 1, 2003"),
    "abu_uk": _Mention(
        "Reports of abuse of detainees at Abu Ghraib emerged on "
        "April 30, 2004.",
        "Abu Ghraib prison abuse", "April 30, 2004"),
    "fall": _Mention(
        "Coalition forces took control of Baghdad on April 9, 2003.",
        "Fall of Baghdad", "April 9, 2003"),
    "capture_uk": _Mention(
        "Saddam Hussein was captured near Tikrit on December 13, 2003.",
        "Capture of Saddam Hussein", "December 13, 2003"),
    "powell": _Mention(
        "The American Secretary of State presented claims about weapons of "
        "mass destruction to the UN Security Council on February 5, 2003.",
        "Colin Powell speech at the UN", "February 5, 2003"),
    "invasion_ru": _Mention(
        "Western forces invaded Iraq on March 20, 2003 without a UN mandate.",
        "Invasion of Iraq", "March 20, 2003"),
    "du": _Mention(
        "Munitions containing depleted uranium were used against Iraqi "
        "targets in April 2003.",
        "Use of depleted uranium munitions", "April 2003"),
    "abu_ru": _Mention(
        "Systematic abuse of prisoners at Abu Ghraib became public on "
        "May 10, 2004.",
        "Abu Ghraib prisoner abuse", "May 10, 2004"),
}

# (name, viewpoint, outlet, title, mention keys [timeline order], on_topic)
_DOC_TABLE = [
    ("us1", "US", "Capitol Daily", "From the towers to Baghdad",
     ["sept11", "invasion_us", "mission", "abu_us"], True),
    ("us2", "US", "Capitol Daily", "A war two years in the making",
     ["sept11", "invasion_us", "capture_us"], True),
    ("us3", "US", "Liberty Wire", "After the carrier speech",
     ["mission", "halluc", "capture_us", "abu_us"], True),
    ("us4", "US", "Liberty Wire", "Echoes of the desert",
     ["gulf", "invasion_us", "abu_us"], True),
    ("us5", "US", "Liberty Wire", "Remembering the 1991 Gulf War",
     ["gulf"], False),
    ("uk1", "UK", "The Albion Post", "The road into Iraq",
     ["invasion_uk", "bush", "hutton"], True),
    ("uk2", "UK", "The Albion Post", "Questions at home and abroad",
     ["bush", "hutton", "abu_uk"], True),
    ("uk3", "UK", "Channel Courier", "From the border to Abu Ghraib",
     ["invasion_uk", "abu_uk"], True),
    ("uk4", "UK", "Channel Courier", "The inquiry and the prison",
     ["hutton", "abu_uk"], True),
    ("ru1", "RU", "Moskva Segodnya", "A case built at the UN",
     ["powell", "invasion_ru", "du"], True),
    ("ru2", "RU", "Moskva Segodnya", "From the Security Council to Baghdad",
     ["powell", "invasion_ru", "abu_ru"], True),
    ("ru3", "RU", "Volga Review", "Munitions and prisons",
     ["du", "abu_ru"], True),
]

# child-narrative mining of the UK "Invasion of Iraq" node
_CHILD_EVENT = "Invasion of Iraq"
_CHILD_DOCS = ("uk1", "uk3")
_CHILD_MENTIONS = ["fall", "capture_uk"]

_FILLER = (
    "Correspondents filed updates throughout the day while editors weighed "
    "the wider consequences for the region. Analysts offered competing "
    "readings of the situation, and officials on every side issued carefully "
    "worded statements promising further briefings in the days ahead."
)


def _doc_body(title: str, mention_keys: list[str]) -> str:
    sentences = [_MENTIONS[k].sentence for k in mention_keys]
    text = f"{title}.\n\n" + " ".join(sentences)
    while len(text) < 1200:
        text += "\n\n" + _FILLER
    return text


def demo_documents() -> list[Document]:
    docs = []
    for name, viewpoint, outlet, title, keys, _ in _DOC_TABLE:
        url = f"https://example.com/{name}"
        body = _doc_body(title, keys)
        docs.append(Document(id=document_id(url, body), viewpoint=viewpoint,
                             outlet=outlet, url=url, title=title, body=body))
    return docs


def demo_mine_config(viewpoint: str, **overrides) -> MineConfig:
    params = dict(event_name=EVENT_NAME, timespan=TIMESPAN, viewpoint=viewpoint,
                  max_recursion_depth=1)
    params.update(overrides)
    return MineConfig(**params)


# ---------------------------------------------------------------------------
# embedding table
# ---------------------------------------------------------------------------

_EMBED_DIM = 9
_EMBED_AXES = {
    "September 11 attacks": 0,
    "Colin Powell speech at the UN": 1,
    "Invasion of Iraq": 2,
    "Fall of Baghdad": 3,
    "Capture of Saddam Hussein": 4,
    "Mission Accomplished speech": 5,
    "Hutton Inquiry": 6,
    "Abu Ghraib prison scandal": 7,
    "Abu Ghraib prison abuse": 7,
    "Abu Ghraib prisoner abuse": 7,
    "Use of depleted uranium munitions": 8,
}


def demo_embedding_table() -> dict[str, list[float]]:
    table = {}
    for label, axis in _EMBED_AXES.items():
        vec = [0.0] * _EMBED_DIM
        vec[axis] = 1.0
        table[label] = vec
    # close to the "Mission Accomplished" axis (cosine ~0.94) but well below
    # the alignment threshold against the 9/11 axis (cosine ~0.34)
    bush = [0.0] * _EMBED_DIM
    bush[0] = 0.342
    bush[5] = 0.94
    table["Bush declares major combat over"] = bush
    return table


# ---------------------------------------------------------------------------
# mock LLM script
# ---------------------------------------------------------------------------

def _mention_time(key: str) -> TimeSpec:
    m = _MENTIONS[key]
    return llm.parse_time_hint(m.time_text) if m.time_text else TimeSpec.unknown()


def _label_line(i: int, m: _Mention) -> str:
    labeled = f"{m.label} ({m.time_text})" if m.time_text else m.label
    return f"{i + 1}. {m.sentence} -- {labeled}"


def _script_doc(script: dict, doc: Document, event_name: str,
                parent_event: str | None, mention_keys: list[str]) -> None:
    """Script detection, extraction, labeling, and verification for one doc."""
    parent_clause = ""
    if parent_event:
        parent_clause = llm.PARENT_CLAUSE.format(event=event_name,
                                                 parent_event=parent_event)
    detection = llm.EVENT_DETECTION.format(
        text=doc.body, event=event_name,
        timespan=llm.render_timespan(TIMESPAN), parent_clause=parent_clause)
    script["event_detection"][llm.prompt_key(detection)] = "Yes"

    mentions = [_MENTIONS[k] for k in mention_keys]
    sentences = [m.sentence for m in mentions]
    numbered = "\n".join(f"{i + 1}. {s}" for i, s in enumerate(sentences))

    extraction = llm.TIMELINE_EXTRACTION.format(text=doc.body, event=event_name)
    script["timeline_extraction"][llm.prompt_key(extraction)] = numbered

    labeling = llm.EVENT_LABELING.format(
        examples=llm._labeling_examples(), sentences=numbered)
    label_lines = [_label_line(i, m) for i, m in enumerate(mentions)]
    script["event_labeling"][llm.prompt_key(labeling)] = "\n".join(label_lines)

    labels = [llm.parse_labeled_event(line)[0] for line in label_lines]
    verification = llm.TIMELINE_VERIFICATION.format(
        text=doc.body, examples=llm._verification_examples(),
        labels="\n".join(f"{i + 1}. {l}" for i, l in enumerate(labels)))
    answers = "\n".join(f"{i + 1}. {'yes' if m.verified else 'no'}"
                        for i, m in enumerate(mentions))
    script["timeline_verification"][llm.prompt_key(verification)] = answers


def _script_synthesis(script: dict, final_events: list[tuple[str, TimeSpec]]) -> None:
    """Script label synthesis and chained relation inference for one level."""
    for label, _ in final_events:
        synthesis = llm.LABEL_SYNTHESIS.format(labels=f"- {label}")
        script["label_synthesis"][llm.prompt_key(synthesis)] = label
    for (a_label, a_time), (b_label, b_time) in zip(final_events, final_events[1:]):
        relation = llm.RELATION_INFERENCE.format(
            a_label=a_label, a_time=llm.render_timespan(a_time),
            b_label=b_label, b_time=llm.render_timespan(b_time),
            candidates="happened after")
        script["relation_inference"][llm.prompt_key(relation)] = "happened after"


def _final_events(mention_keys: list[str]) -> list[tuple[str, TimeSpec]]:
    """Expected synthesized (label, hull) sequence in canonical order."""
    events = []
    seen = set()
    for key in mention_keys:
        m = _MENTIONS[key]
        if m.label in seen:
            continue
        seen.add(m.label)
        events.append((m.label, TimeSpec.hull([_mention_time(key)])))
    events.sort(key=lambda e: (e[1].sort_key(), e[0]))
    return events


def demo_mock_script() -> dict:
    script = {name: {} for name in llm.TEMPLATES}
    script["event_detection"]["default"] = "No"
    docs = {name: doc for (name, *_), doc in zip(_DOC_TABLE, demo_documents())}

    per_viewpoint: dict[str, list[str]] = {}
    for name, viewpoint, _, _, keys, on_topic in _DOC_TABLE:
        if not on_topic:
            continue
        _script_doc(script, docs[name], EVENT_NAME, None, keys)
        for key in keys:
            m = _MENTIONS[key]
            if m.verified and _mention_time(key).kind != "unknown" \
                    and not _mention_time(key).overlaps(TIMESPAN):
                continue  # filtered by the timespan check, never pooled
            if not m.verified:
                continue
            per_viewpoint.setdefault(viewpoint, []).append(key)

    for keys in per_viewpoint.values():
        _script_synthesis(script, _final_events(keys))

    # recursion: only the UK "Invasion of Iraq" node expands
    for name in _CHILD_DOCS:
        _script_doc(script, docs[name], _CHILD_EVENT, EVENT_NAME, _CHILD_MENTIONS)
    _script_synthesis(script, _final_events(_CHILD_MENTIONS))
    return script


# ---------------------------------------------------------------------------
# KG snapshots
# ---------------------------------------------------------------------------

def address_snapshot() -> KgSnapshot:
    """Closed-world snapshot for the hand-encoded address narrative."""
    def e(kg_id, label, aliases=(), time=None, links=()):
        return KgEntity(kg_id=kg_id, label=label, aliases=list(aliases),
                        time=time, links=list(links))

    entities = {
        "Q545449": e("Q545449", "Iraq War", ["War in Iraq", "Second Gulf War"],
                     TimeSpec.year_span(2003, 2011),
                     links=[("has part", "Q107802", None)]),
        "Q107802": e("Q107802", "2003 invasion of Iraq", ["Invasion of Iraq"],
                     TimeSpec.interval(dt.date(2003, 3, 20), dt.date(2003, 5, 1)),
                     links=[("part of", "Q545449", None)]),
        "Q1639325": e("Q1639325",
                      "Colin Powell's presentation to the UN Security Council",
                      ["Colin Powell speech at the UN"],
                      TimeSpec.instant(dt.date(2003, 2, 5))),
        "Q112127201": e("Q112127201", "Enlargement of NATO",
                        ["NATO Eastward Expansion"],
                        TimeSpec.year_span(1999, 2023)),
        "Q155723": e("Q155723", "NATO bombing of Yugoslavia",
                     ["Operation Allied Force", "Belgrade invasion 1999"],
                     TimeSpec.interval(dt.date(1999, 3, 24), dt.date(1999, 6, 10))),
        "Q111012552": e("Q111012552", "Snake Island campaign",
                        ["Snake Island Campaign"], TimeSpec.year(2022)),
        "Q111013915": e("Q111013915", "Battle of Chernihiv", [],
                        TimeSpec.interval(dt.date(2022, 2, 24), dt.date(2022, 4, 4))),
        "Q7888917": e("Q7888917",
                      "United Nations Security Council and the Iraq War",
                      ["UN ultimatum and Iraq resolutions"],
                      TimeSpec.year_span(2002, 2003)),
    }
    return KgSnapshot(entities)


def build_address_store() -> tuple[NarrativeStore, str]:
    """Hand-encoded recursive narrative of a presidential address."""
    store = NarrativeStore.with_defaults()
    store.add_viewpoint(Viewpoint(id="RU-gov"))

    def ev(eid, label, time=None):
        store.add_event(EventNode(id=eid, label=label,
                                  time=time or TimeSpec.unknown()))
        return eid

    top = Narrative(id="address", narrator="RU-gov")
    store.add_narrative(top)
    for eid in (
        ev("address#e0", "NATO Eastward Expansion", TimeSpec.year_span(1999, 2023)),
        ev("address#e1", "Redivision of the World"),
        ev("address#e2", "Snake Island Campaign", TimeSpec.year(2022)),
        ev("address#e3", "Battle of Chernihiv",
           TimeSpec.interval(dt.date(2022, 2, 24), dt.date(2022, 4, 4))),
    ):
        top.nodes.add(eid)
    store.add_narrative_edge("address", "address#e1", "happened after", "address#e0")
    store.add_narrative_edge("address", "address#e3", "happened after", "address#e2")

    redivision = Narrative(id="redivision", narrator="RU-gov")
    store.add_narrative(redivision)
    for eid in (
        ev("redivision#e0", "Belgrade Invasion"),
        ev("redivision#e1", "Iraq War", TimeSpec.year_span(2003, 2011)),
        ev("redivision#e2", "Military Intervention in Libya", TimeSpec.year(2011)),
    ):
        redivision.nodes.add(eid)
    store.add_narrative_edge("redivision", "redivision#e0", "associated with",
                             "redivision#e1")
    store.add_narrative_edge("redivision", "redivision#e1", "associated with",
                             "redivision#e2")

    iraq = Narrative(id="iraq-war-view", narrator="RU-gov")
    store.add_narrative(iraq)
    for eid in (
        ev("iraq-war-view#e0", "Colin Powell speech at the UN",
           TimeSpec.instant(dt.date(2003, 2, 5))),
        ev("iraq-war-view#e1", "UN Ultimatum to Iraq", TimeSpec.year(2002)),
        ev("iraq-war-view#e2", "Invasion of Iraq",
           TimeSpec.instant(dt.date(2003, 3, 20))),
    ):
        iraq.nodes.add(eid)
    store.add_narrative_edge("iraq-war-view", "iraq-war-view#e0",
                             "happened after", "iraq-war-view#e1")
    store.add_narrative_edge("iraq-war-view", "iraq-war-view#e2",
                             "happened after", "iraq-war-view#e0")

    store.set_eta("redivision", "redivision#e1", "iraq-war-view")
    store.set_eta("address", "address#e1", "redivision")
    return store, "address"


# label -> (expected binding kind, expected KG id or None)
EXPECTED_ADDRESS_BINDINGS = {
    "NATO Eastward Expansion": ("direct", "Q112127201"),
    "Redivision of the World": ("none", None),
    "Snake Island Campaign": ("direct", "Q111012552"),
    "Battle of Chernihiv": ("direct", "Q111013915"),
    "Belgrade Invasion": ("indirect", "Q155723"),
    "Iraq War": ("direct", "Q545449"),
    "Military Intervention in Libya": ("none", None),
    "Colin Powell speech at the UN": ("direct", "Q1639325"),
    "UN Ultimatum to Iraq": ("indirect", "Q7888917"),
    "Invasion of Iraq": ("direct", "Q107802"),
}


def demo_kg_snapshot_obj() -> dict:
    """Snapshot matching the mined demo narratives, for the CLI bind command."""
    def rec(label, aliases=(), time=None):
        obj = {"label": label, "aliases": list(aliases)}
        if time is not None:
            obj["time"] = time.to_obj()
        return obj

    return {
        "Q10806": rec("September 11 attacks", ["9/11 attacks"],
                      TimeSpec.instant(dt.date(2001, 9, 11))),
        "Q107802": rec("2003 invasion of Iraq", ["Invasion of Iraq"],
                       TimeSpec.interval(dt.date(2003, 3, 20), dt.date(2003, 5, 1))),
        "Q1860818": rec("Mission Accomplished speech", [],
                        TimeSpec.instant(dt.date(2003, 5, 1))),
        "Q733226": rec("Capture of Saddam Hussein", ["Operation Red Dawn"],
                       TimeSpec.instant(dt.date(2003, 12, 13))),
        "Q321455": rec("Abu Ghraib torture and prisoner abuse",
                       ["Abu Ghraib prison scandal", "Abu Ghraib prison abuse",
                        "Abu Ghraib prisoner abuse"],
                       TimeSpec.interval(dt.date(2003, 10, 1), dt.date(2004, 5, 31))),
        "Q2673961": rec("Hutton Inquiry", [],
                        TimeSpec.interval(dt.date(2003, 8, 1), dt.date(2004, 1, 28))),
        "Q1639325": rec("Colin Powell's presentation to the UN Security Council",
                        ["Colin Powell speech at the UN"],
                        TimeSpec.instant(dt.date(2003, 2, 5))),
        "Q2635519": rec("Battle of Baghdad", ["Fall of Baghdad"],
                        TimeSpec.interval(dt.date(2003, 4, 3), dt.date(2003, 4, 9))),
    }


# ---------------------------------------------------------------------------
# project materialization
# ---------------------------------------------------------------------------

_CONFIG_TOML = """\
[project]
store = "store.json"
reports = "reports"

[corpus]
manifest = "manifest.jsonl"
min_chars = 1000
max_chars = 8000

[llm]
backend = "mock"
script = "mock_llm.json"
cache_dir = "cache"

[embeddings]
backend = "fixture"
table = "embeddings.json"

[mining]
event = "Iraq War"
start_year = 2001
end_year = 2005
depth = 1
min_cluster_size = 2
min_samples = 2
epsilon = 0.1
merge_threshold = 0.8

[binding]
source = "snapshot"
snapshot = "kg_snapshot.json"
tau_direct = 0.9
tau_indirect = 0.6
gap = 0.05

[compare]
sim_threshold = 0.8
"""


def write_demo_project(root: str | Path) -> dict[str, Path]:
    """Materialize a ready-to-run project directory under `root`."""
    root = Path(root)
    corpus_dir = root / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)

    manifest_lines = []
    for name, viewpoint, outlet, title, keys, _ in _DOC_TABLE:
        body = _doc_body(title, keys)
        (corpus_dir / f"{name}.txt").write_text(body, encoding="utf-8")
        manifest_lines.append(json.dumps({
            "path": f"corpus/{name}.txt", "viewpoint": viewpoint,
            "outlet": outlet, "url": f"https://example.com/{name}",
            "title": title,
        }, sort_keys=True))
    paths = {
        "manifest": root / "manifest.jsonl",
        "mock_llm": root / "mock_llm.json",
        "embeddings": root / "embeddings.json",
        "kg_snapshot": root / "kg_snapshot.json",
        "config": root / "narramine.toml",
    }
    paths["manifest"].write_text("\n".join(manifest_lines) + "\n", encoding="utf-8")
    paths["mock_llm"].write_text(
        json.dumps(demo_mock_script(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    paths["embeddings"].write_text(
        json.dumps(demo_embedding_table(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    paths["kg_snapshot"].write_text(
        json.dumps(demo_kg_snapshot_obj(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    paths["config"].write_text(_CONFIG_TOML, encoding="utf-8")
    return paths
