"""Cross-viewpoint narrative comparison.

Aligns events of narratives mined under different viewpoints (shared KG
binding first, label similarity second), derives commonalities shared by
every input, per-pair unique events, and each narrative's starting event.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import AFTER_PREDICATES, TEMPORAL, NarrativeStore
from .semantics import cosine, embed


@dataclass
class AlignedPair:
    a: str  # event id in the first narrative
    b: str  # event id in the second narrative
    basis: str  # "shared-binding" | "similarity"
    score: float


@dataclass
class EventAlignment:
    narrative_a: str
    narrative_b: str
    pairs: list[AlignedPair] = field(default_factory=list)

    def covered_a(self) -> set[str]:
        return {p.a for p in self.pairs}

    def covered_b(self) -> set[str]:
        return {p.b for p in self.pairs}


def narrative_events(store: NarrativeStore, narrative_id: str,
                     flatten: bool = False) -> list[str]:
    """Top-level event ids; with `flatten`, child-narrative events one
    recursion level down are included too."""
    narrative = store.narrative(narrative_id)
    ids = sorted(e for e in narrative.nodes if e in store.events)
    if flatten:
        for child_id in sorted(narrative.eta.values()):
            child = store.narrative(child_id)
            ids.extend(sorted(e for e in child.nodes
                              if e in store.events and e not in ids))
    return ids


def _kg_id(store: NarrativeStore, event_id: str) -> str | None:
    binding = store.events[event_id].binding
    return getattr(binding, "kg_id", None) if binding is not None else None


def align_events(store: NarrativeStore, n1: str, n2: str, embed_backend,
                 sim_threshold: float = 0.8, flatten: bool = False) -> EventAlignment:
    """One-to-one event matching between two narratives.

    Events bound to the same KG entity pair first (score 1). Remaining
    events pair greedily by label-embedding cosine similarity at or above
    the threshold, highest first; ties resolve by event-id order.
    """
    events1 = narrative_events(store, n1, flatten)
    events2 = narrative_events(store, n2, flatten)
    pairs: list[AlignedPair] = []
    free1, free2 = set(events1), set(events2)

    by_kg: dict[str, list[str]] = {}
    for e in events2:
        kg = _kg_id(store, e)
        if kg is not None:
            by_kg.setdefault(kg, []).append(e)
    for e1 in events1:
        kg = _kg_id(store, e1)
        if kg is None:
            continue
        partners = [e for e in by_kg.get(kg, []) if e in free2]
        if partners:
            e2 = min(partners)
            pairs.append(AlignedPair(e1, e2, "shared-binding", 1.0))
            free1.discard(e1)
            free2.discard(e2)

    rem1 = [e for e in events1 if e in free1]
    rem2 = [e for e in events2 if e in free2]
    if rem1 and rem2:
        labels = [store.events[e].label for e in rem1 + rem2]
        vectors = embed(embed_backend, labels)
        v1, v2 = vectors[:len(rem1)], vectors[len(rem1):]
        scored = []
        for i, e1 in enumerate(rem1):
            for j, e2 in enumerate(rem2):
                sim = cosine(v1[i], v2[j])
                if sim >= sim_threshold:
                    scored.append((-sim, e1, e2, sim))
        for _, e1, e2, sim in sorted(scored):
            if e1 in free1 and e2 in free2:
                pairs.append(AlignedPair(e1, e2, "similarity", sim))
                free1.discard(e1)
                free2.discard(e2)

    pairs.sort(key=lambda p: (p.a, p.b))
    return EventAlignment(narrative_a=n1, narrative_b=n2, pairs=pairs)


def commonalities(store: NarrativeStore, narrative_ids: list[str], embed_backend,
                  sim_threshold: float = 0.8, flatten: bool = False
                  ) -> list[list[tuple[str, str]]]:
    """Event groups present in every input narrative.

    Pairwise alignments are closed transitively; a group survives only if
    it touches all inputs. Each group is a sorted list of
    (narrative id, event id); the result is sorted by its first member.
    """
    ids = sorted(set(narrative_ids))
    if len(ids) == 1:
        nid = ids[0]
        return [[(nid, e)] for e in narrative_events(store, nid, flatten)]

    keys = [(nid, e) for nid in ids for e in narrative_events(store, nid, flatten)]
    parent = {k: k for k in keys}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, n1 in enumerate(ids):
        for n2 in ids[i + 1:]:
            alignment = align_events(store, n1, n2, embed_backend,
                                     sim_threshold, flatten)
            for pair in alignment.pairs:
                parent[find((n1, pair.a))] = find((n2, pair.b))

    groups: dict[tuple[str, str], list[tuple[str, str]]] = {}
    for k in keys:
        groups.setdefault(find(k), []).append(k)
    shared = [sorted(g) for g in groups.values()
              if {nid for nid, _ in g} == set(ids)]
    return sorted(shared)


def differences(store: NarrativeStore, n1: str, n2: str, embed_backend,
                sim_threshold: float = 0.8, flatten: bool = False
                ) -> tuple[set[str], set[str]]:
    """Events of each narrative not covered by the pairwise alignment."""
    if n1 == n2:
        return set(), set()
    alignment = align_events(store, n1, n2, embed_backend, sim_threshold, flatten)
    unique1 = set(narrative_events(store, n1, flatten)) - alignment.covered_a()
    unique2 = set(narrative_events(store, n2, flatten)) - alignment.covered_b()
    return unique1, unique2


def narrative_start(store: NarrativeStore, narrative_id: str) -> str | None:
    """The event opening the narrative: no predecessor under the Temporal
    edges, earliest known time. None when several sources are tied or
    undated (ambiguous start)."""
    narrative = store.narrative(narrative_id)
    events = sorted(e for e in narrative.nodes if e in store.events)
    if not events:
        return None
    indegree = {e: 0 for e in events}
    has_edges = False
    for src, pred, dst in narrative.narrative_edges:
        if store.narrative_predicates[pred].category != TEMPORAL:
            continue
        # "happened after" points later -> earlier; flip to precedence order
        later = src if pred in AFTER_PREDICATES else dst
        if later in indegree:
            indegree[later] += 1
            has_edges = True
    sources = [e for e in events if indegree[e] == 0]
    if len(sources) == 1:
        return sources[0]
    if not sources:
        return None
    if not has_edges and len(events) > 1:
        # no temporal structure at all: fall back to the earliest dated event
        sources = events
    dated = sorted((store.events[e].time.sort_key(), e) for e in sources
                   if store.events[e].time.bounds() is not None)
    if not dated:
        return None
    if len(dated) >= 2 and dated[0][0] == dated[1][0]:
        return None
    return dated[0][1]


def comparison_report(store: NarrativeStore, narrative_ids: list[str], embed_backend,
                      sim_threshold: float = 0.8, flatten: bool = False) -> dict:
    """JSON-ready report: common groups, per-narrative unique events, starts."""
    ids = sorted(set(narrative_ids))
    groups = commonalities(store, ids, embed_backend, sim_threshold, flatten)
    common_ids = {key for group in groups for key in group}
    uniques = {
        nid: [{"event": e, "label": store.events[e].label}
              for e in narrative_events(store, nid, flatten)
              if (nid, e) not in common_ids]
        for nid in ids
    }
    starts = {}
    for nid in ids:
        start = narrative_start(store, nid)
        starts[nid] = ({"event": start, "label": store.events[start].label}
                       if start is not None else None)
    return {
        "narratives": ids,
        "commonalities": [
            [{"narrative": nid, "event": e, "label": store.events[e].label}
             for nid, e in group]
            for group in groups
        ],
        "unique_events": uniques,
        "starts": starts,
        "sim_threshold": sim_threshold,
    }
