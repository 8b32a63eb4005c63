"""Six-stage narrative mining: document selection, event detection, timeline
extraction, pairwise matching, synthesis, and recursion."""

from __future__ import annotations

import json
import logging
import re
import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import llm as llm_ops
from .clustering import hdbscan
from .corpus import Document, select_viewpoint
from .errors import (
    BackendUnavailable,
    EmptyTimeline,
    EmptyViewpointCollection,
    NoDocumentsDetected,
    UnknownPredicate,
)
from .model import AFTER_PREDICATES, EventNode, Narrative, NarrativeStore, TimeSpec, Viewpoint
from .semantics import embed, merge_clusters

log = logging.getLogger(__name__)


@dataclass
class MineConfig:
    event_name: str
    timespan: TimeSpec
    viewpoint: str
    max_recursion_depth: int = 1
    min_cluster_size: int = 2
    min_samples: int = 2
    epsilon: float = 0.1
    merge_threshold: float = 0.8
    noise_policy: str = "singleton"  # singleton | drop
    relation_candidates: tuple[str, ...] = ("happened after",)
    concurrency: int = 1

    def __post_init__(self):
        if self.timespan.kind != "interval":
            raise ValueError("mining timespan must be an interval")
        if self.max_recursion_depth < 0:
            raise ValueError("max_recursion_depth must be >= 0")
        if self.noise_policy not in ("singleton", "drop"):
            raise ValueError(f"bad noise policy: {self.noise_policy!r}")


@dataclass
class TimelineEvent:
    label: str
    time: TimeSpec
    sentence: str
    index: int  # position within the document timeline


@dataclass
class Timeline:
    document_id: str
    events: list[TimelineEvent] = field(default_factory=list)


@dataclass
class MiningReport:
    event_name: str
    viewpoint: str
    narrative_id: str = ""
    docs_selected: int = 0
    docs_detected: int = 0
    docs_skipped: list[str] = field(default_factory=list)
    timelines: int = 0
    events_pooled: int = 0
    clusters: int = 0
    noise_points: int = 0
    merges: int = 0
    events_final: int = 0
    relations: int = 0
    warnings: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    children: list["MiningReport"] = field(default_factory=list)

    def to_obj(self) -> dict:
        obj = {
            "event_name": self.event_name,
            "viewpoint": self.viewpoint,
            "narrative_id": self.narrative_id,
            "docs_selected": self.docs_selected,
            "docs_detected": self.docs_detected,
            "docs_skipped": list(self.docs_skipped),
            "timelines": self.timelines,
            "events_pooled": self.events_pooled,
            "clusters": self.clusters,
            "noise_points": self.noise_points,
            "merges": self.merges,
            "events_final": self.events_final,
            "relations": self.relations,
            "warnings": list(self.warnings),
            "timings": dict(self.timings),
            "children": [c.to_obj() for c in self.children],
        }
        return obj

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True, indent=2) + "\n"


def slug(text: str) -> str:
    return re.sub(r"-+", "-", re.sub(r"[^a-z0-9]+", "-", text.lower())).strip("-")


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def build_timeline(llm_backend, document: Document, event_name: str,
                   timespan: TimeSpec) -> Timeline:
    sentences = llm_ops.extract_timeline_raw(llm_backend, document, event_name)
    labeled = llm_ops.label_events(llm_backend, sentences)
    verified = llm_ops.verify_timeline(llm_backend, labeled, document, timespan)
    # verified is an order-preserving subsequence of labeled
    events = []
    vi = 0
    for idx, (sentence, (label, ts)) in enumerate(zip(sentences, labeled)):
        if vi < len(verified) and verified[vi] == (label, ts):
            events.append(TimelineEvent(label=label, time=ts, sentence=sentence, index=idx))
            vi += 1
    return Timeline(document_id=document.id, events=events)


def pairwise_match(timelines: list[Timeline], embed_backend, *,
                   min_cluster_size: int = 2, min_samples: int = 2,
                   epsilon: float = 0.1, noise_policy: str = "singleton"):
    """Pool every timeline event, embed the labels, and cluster them.

    Returns (clusters, pooled events, vectors, noise count). Noise points
    become singleton candidate events under the default policy.
    """
    if not timelines:
        raise ValueError("need at least one timeline")
    pooled: list[tuple[str, TimelineEvent]] = [
        (tl.document_id, ev) for tl in timelines for ev in tl.events]
    if not pooled:
        return [], pooled, np.zeros((0, embed_backend.dimension)), 0
    vectors = embed(embed_backend, [ev.label for _, ev in pooled])
    result = hdbscan(vectors, min_cluster_size=min_cluster_size,
                     min_samples=min_samples, epsilon=epsilon)
    clusters = [list(c) for c in result.clusters]
    noise = [i for i, a in enumerate(result.assignments) if a == -1]
    if noise_policy == "singleton":
        clusters.extend([i] for i in noise)
        clusters.sort(key=min)
    return clusters, pooled, vectors, len(noise)


@dataclass
class SynthesizedEvent:
    label: str
    time: TimeSpec
    provenance: list[tuple[str, tuple[int, int]]]
    members: list[int]


@dataclass
class NarrativeFragment:
    events: list[SynthesizedEvent]
    edges: list[tuple[int, str, int]]  # indices into events
    merges: int = 0
    warnings: list[str] = field(default_factory=list)


def synthesize(clusters: list[list[int]], pooled, vectors, llm_backend, *,
               merge_threshold: float = 0.8,
               relation_candidates: tuple[str, ...] = ("happened after",),
               exclude_labels: frozenset[str] = frozenset()) -> NarrativeFragment:
    """Merge near-duplicate clusters, synthesize one event per cluster, and
    infer narrative relations between time-adjacent events."""
    warnings: list[str] = []
    merged, merge_log = (merge_clusters(clusters, vectors, merge_threshold)
                         if clusters else ([], []))

    events: list[SynthesizedEvent] = []
    for members in merged:
        member_pairs = [(pooled[i][1].label, pooled[i][1].time) for i in members]
        label, hull = llm_ops.synthesize_label(llm_backend, member_pairs)
        if label.strip().casefold() in exclude_labels:
            warnings.append(f"excluded self-referential event label {label!r}")
            continue
        provenance = sorted({(pooled[i][0], (pooled[i][1].index, pooled[i][1].index))
                             for i in members})
        events.append(SynthesizedEvent(label=label, time=hull,
                                       provenance=provenance, members=sorted(members)))
    # canonical event order: chronological, unknown last, then by label
    events.sort(key=lambda e: (e.time.sort_key(), e.label))

    edges: list[tuple[int, str, int]] = []
    order = sorted(range(len(events)), key=lambda i: (events[i].time.sort_key(), events[i].label))
    for a_idx, b_idx in zip(order, order[1:]):
        a, b = events[a_idx], events[b_idx]
        try:
            pred = llm_ops.infer_relation(llm_backend, (a.label, a.time), (b.label, b.time),
                                          candidates=relation_candidates)
        except UnknownPredicate as exc:
            warnings.append(f"model proposed unregistered relation {exc}; skipped")
            pred = None
        if pred is None:
            continue
        if pred in AFTER_PREDICATES:
            edges.append((b_idx, pred, a_idx))
        else:
            edges.append((a_idx, pred, b_idx))
    return NarrativeFragment(events=events, edges=edges,
                             merges=len(merge_log), warnings=warnings)


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def mine(config: MineConfig, store: NarrativeStore, documents: list[Document],
         llm_backend, embed_backend) -> tuple[str, MiningReport]:
    """Mine one narrative per (event, viewpoint), recursing into its nodes."""
    if config.viewpoint not in store.viewpoints:
        store.add_viewpoint(Viewpoint(id=config.viewpoint))
    return _mine_level(config, store, documents, llm_backend, embed_backend,
                       depth_remaining=config.max_recursion_depth,
                       event_name=config.event_name, parent_event=None)


def _mine_level(config, store, documents, llm_backend, embed_backend, *,
                depth_remaining: int, event_name: str,
                parent_event: str | None) -> tuple[str, MiningReport]:
    report = MiningReport(event_name=event_name, viewpoint=config.viewpoint)
    t0 = _time.perf_counter()

    docs_v = select_viewpoint(documents, config.viewpoint)
    report.docs_selected = len(docs_v)
    if not docs_v:
        raise EmptyViewpointCollection(config.viewpoint)

    detected: list[Document] = []
    for doc in docs_v:
        try:
            if llm_ops.detect_event(llm_backend, doc, event_name, config.timespan,
                                    parent_event=parent_event):
                detected.append(doc)
        except (BackendUnavailable, ValueError) as exc:
            report.docs_skipped.append(doc.id)
            report.warnings.append(f"detection failed for {doc.id}: {exc}")
    report.docs_detected = len(detected)
    report.timings["detection"] = _time.perf_counter() - t0
    if not detected:
        raise NoDocumentsDetected(event_name)

    t1 = _time.perf_counter()
    timelines: list[Timeline] = []
    for doc in detected:
        try:
            tl = build_timeline(llm_backend, doc, event_name, config.timespan)
        except (BackendUnavailable, EmptyTimeline) as exc:
            report.docs_skipped.append(doc.id)
            report.warnings.append(f"timeline failed for {doc.id}: {exc}")
            continue
        if tl.events:
            timelines.append(tl)
    report.timelines = len(timelines)
    report.timings["extraction"] = _time.perf_counter() - t1
    if not timelines:
        raise NoDocumentsDetected(event_name)

    t2 = _time.perf_counter()
    clusters, pooled, vectors, noise = pairwise_match(
        timelines, embed_backend, min_cluster_size=config.min_cluster_size,
        min_samples=config.min_samples, epsilon=config.epsilon,
        noise_policy=config.noise_policy)
    report.events_pooled = len(pooled)
    report.clusters = len(clusters)
    report.noise_points = noise
    report.timings["matching"] = _time.perf_counter() - t2

    t3 = _time.perf_counter()
    exclude = frozenset({event_name.strip().casefold()}) if parent_event else frozenset()
    fragment = synthesize(clusters, pooled, vectors, llm_backend,
                          merge_threshold=config.merge_threshold,
                          relation_candidates=config.relation_candidates,
                          exclude_labels=exclude)
    report.merges = fragment.merges
    report.warnings.extend(fragment.warnings)
    report.timings["synthesis"] = _time.perf_counter() - t3

    narrative_id = _fresh_narrative_id(store, event_name, config.viewpoint)
    narrative = Narrative(id=narrative_id, narrator=config.viewpoint)
    store.add_narrative(narrative)
    event_ids = []
    for i, ev in enumerate(fragment.events):
        eid = f"{narrative_id}#e{i}"
        store.add_event(EventNode(id=eid, label=ev.label, time=ev.time,
                                  provenance=list(ev.provenance)))
        narrative.nodes.add(eid)
        event_ids.append(eid)
    for src, pred, dst in fragment.edges:
        store.add_narrative_edge(narrative_id, event_ids[src], pred, event_ids[dst])
    report.narrative_id = narrative_id
    report.events_final = len(event_ids)
    report.relations = len(fragment.edges)

    if depth_remaining > 0:
        _recurse_level(config, store, documents, llm_backend, embed_backend,
                       narrative_id=narrative_id, depth_remaining=depth_remaining,
                       parent_event=event_name, report=report)
    return narrative_id, report


def _recurse_level(config, store, documents, llm_backend, embed_backend, *,
                   narrative_id: str, depth_remaining: int,
                   parent_event: str, report: MiningReport) -> None:
    narrative = store.narrative(narrative_id)
    for eid in sorted(narrative.nodes):
        ev = store.events.get(eid)
        if ev is None or eid in narrative.eta:
            continue
        if ev.label.strip().casefold() == parent_event.strip().casefold():
            continue
        try:
            child_id, child_report = _mine_level(
                config, store, documents, llm_backend, embed_backend,
                depth_remaining=depth_remaining - 1, event_name=ev.label,
                parent_event=parent_event)
        except NoDocumentsDetected:
            continue  # leaf event: no document expands it
        if store.narrative(child_id).nodes:
            store.set_eta(narrative_id, eid, child_id)
            report.children.append(child_report)
        else:
            del store.narratives[child_id]


def recurse(narrative_id: str, config: MineConfig, store: NarrativeStore,
            documents: list[Document], llm_backend, embed_backend) -> MiningReport:
    """Expand every event node of an existing narrative into child narratives."""
    report = MiningReport(event_name=config.event_name, viewpoint=config.viewpoint,
                          narrative_id=narrative_id)
    if config.max_recursion_depth > 0:
        _recurse_level(config, store, documents, llm_backend, embed_backend,
                       narrative_id=narrative_id,
                       depth_remaining=config.max_recursion_depth,
                       parent_event=config.event_name, report=report)
    return report


def _fresh_narrative_id(store: NarrativeStore, event_name: str, viewpoint: str) -> str:
    base = f"{slug(event_name)}--{slug(viewpoint)}"
    if base not in store.narratives:
        return base
    k = 2
    while f"{base}-{k}" in store.narratives:
        k += 1
    return f"{base}-{k}"
