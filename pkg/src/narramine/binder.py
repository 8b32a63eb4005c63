"""Linking narrative event labels to knowledge-graph events.

Each event label is classified as a Direct binding (unambiguous match),
an Indirect binding (similar entity, with a loss-of-focus note), or
No Binding (a virtual subgraph local to the narrative). Recursive nodes
are bound depth-first across the whole eta-reachable subtree.
"""

from __future__ import annotations

import difflib
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AlreadyBound, MissingNarrative, SourceUnavailable
from .model import NarrativeStore, TimeSpec
from .semantics import cosine

TIME_BONUS = 0.05


@dataclass
class Thresholds:
    tau_direct: float = 0.90
    tau_indirect: float = 0.60
    gap: float = 0.05


@dataclass
class KgCandidate:
    kg_id: str
    kg_label: str
    description: str = ""
    time: TimeSpec | None = None
    score: float = 0.0


@dataclass
class BindingResult:
    kind: str  # "direct" | "indirect" | "none"
    kg_id: str | None = None
    note: str = ""
    virtual_subgraph: dict | None = None
    confidence: float = 0.0
    candidates: list[KgCandidate] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("direct", "indirect", "none"):
            raise ValueError(f"bad binding kind: {self.kind!r}")
        if self.kind == "none" and self.virtual_subgraph is None:
            raise ValueError("no-binding results must carry a virtual subgraph")
        if self.kind != "none" and self.kg_id is None:
            raise ValueError(f"{self.kind} binding needs a kg_id")

    def to_obj(self) -> dict:
        obj = {"kind": self.kind, "confidence": round(self.confidence, 6)}
        if self.kg_id is not None:
            obj["kg_id"] = self.kg_id
        if self.note:
            obj["note"] = self.note
        if self.virtual_subgraph is not None:
            obj["virtual_subgraph"] = self.virtual_subgraph
        if self.candidates:
            obj["candidates"] = [
                {"kg_id": c.kg_id, "kg_label": c.kg_label, "score": round(c.score, 6)}
                for c in self.candidates
            ]
        return obj

    @staticmethod
    def from_obj(obj: dict) -> "BindingResult":
        return BindingResult(
            kind=obj["kind"], kg_id=obj.get("kg_id"), note=obj.get("note", ""),
            virtual_subgraph=obj.get("virtual_subgraph"),
            confidence=obj.get("confidence", 0.0),
            candidates=[KgCandidate(kg_id=c["kg_id"], kg_label=c["kg_label"],
                                    score=c["score"])
                        for c in obj.get("candidates", [])])


# ---------------------------------------------------------------------------
# sources
# ---------------------------------------------------------------------------

@dataclass
class KgEntity:
    kg_id: str
    label: str
    aliases: list[str] = field(default_factory=list)
    description: str = ""
    time: TimeSpec | None = None
    # (predicate, target, attribution viewpoint or None)
    links: list[tuple[str, str, str | None]] = field(default_factory=list)


class KgSnapshot:
    """Closed-world fixture of a knowledge graph; lookups outside it miss."""

    def __init__(self, entities: dict[str, KgEntity]):
        self.entities = entities

    @staticmethod
    def from_obj(obj: dict) -> "KgSnapshot":
        entities = {}
        for kg_id, rec in obj.items():
            entities[kg_id] = KgEntity(
                kg_id=kg_id, label=rec["label"], aliases=list(rec.get("aliases", [])),
                description=rec.get("description", ""),
                time=TimeSpec.from_obj(rec["time"]) if "time" in rec else None,
                links=[(p, t, a) for p, t, a in rec.get("links", [])])
        return KgSnapshot(entities)

    @staticmethod
    def from_file(path: str | Path) -> "KgSnapshot":
        return KgSnapshot.from_obj(json.loads(Path(path).read_text(encoding="utf-8")))

    def candidates_for(self, label: str) -> list[KgEntity]:
        return [self.entities[k] for k in sorted(self.entities)]

    def entity(self, kg_id: str) -> KgEntity | None:
        return self.entities.get(kg_id)


class WikiLiveSource:
    """Wikipedia title search plus Wikidata entity data, with a mandatory
    on-disk response cache."""

    SEARCH_URL = "https://en.wikipedia.org/w/api.php"
    ENTITY_URL = "https://www.wikidata.org/wiki/Special:EntityData/{qid}.json"

    def __init__(self, cache_dir: str | Path, limit: int = 10, timeout: float = 30.0):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.limit = limit
        self.timeout = timeout

    def _cached_get(self, url: str, params: dict | None) -> dict:
        import requests

        raw = url + "?" + json.dumps(params or {}, sort_keys=True)
        key = hashlib.sha256(raw.encode("utf-8")).hexdigest()
        path = self.cache_dir / key
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        try:
            resp = requests.get(url, params=params, timeout=self.timeout,
                                headers={"User-Agent": "narramine/0.1"})
            resp.raise_for_status()
            data = resp.json()
        except Exception as exc:  # noqa: BLE001
            raise SourceUnavailable(f"live KG lookup failed: {exc}") from exc
        path.write_text(json.dumps(data), encoding="utf-8")
        return data

    def candidates_for(self, label: str) -> list[KgEntity]:
        search = self._cached_get(self.SEARCH_URL, {
            "action": "query", "list": "search", "srsearch": label,
            "srlimit": self.limit, "format": "json"})
        out = []
        for hit in search.get("query", {}).get("search", []):
            title = hit["title"]
            pages = self._cached_get(self.SEARCH_URL, {
                "action": "query", "prop": "pageprops", "titles": title,
                "format": "json"})
            for page in pages.get("query", {}).get("pages", {}).values():
                qid = page.get("pageprops", {}).get("wikibase_item")
                if qid:
                    out.append(KgEntity(kg_id=qid, label=title))
        return out

    def entity(self, kg_id: str) -> KgEntity | None:
        data = self._cached_get(self.ENTITY_URL.format(qid=kg_id), None)
        ent = data.get("entities", {}).get(kg_id)
        if ent is None:
            return None
        label = ent.get("labels", {}).get("en", {}).get("value", kg_id)
        aliases = [a["value"] for a in ent.get("aliases", {}).get("en", [])]
        return KgEntity(kg_id=kg_id, label=label, aliases=aliases)


# ---------------------------------------------------------------------------
# scoring and classification
# ---------------------------------------------------------------------------

def _norm(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip().casefold())


def label_similarity(a: str, b: str, embed_backend=None) -> float:
    """Cosine over embeddings when available, else normalized edit similarity."""
    if embed_backend is not None:
        try:
            va, vb = embed_backend.embed([a, b])
            return (cosine(va, vb) + 1.0) / 2.0
        except Exception:  # noqa: BLE001 - fall back to the lexical path
            pass
    return difflib.SequenceMatcher(None, _norm(a), _norm(b)).ratio()


def score_entity(label: str, time: TimeSpec | None, entity: KgEntity,
                 embed_backend=None) -> float:
    sim = max(label_similarity(label, name, embed_backend)
              for name in [entity.label, *entity.aliases])
    if time is not None and entity.time is not None and time.overlaps(entity.time):
        sim = min(1.0, sim + TIME_BONUS)
    return sim


def search_candidates(source, label: str, time: TimeSpec | None = None,
                      embed_backend=None, limit: int = 10,
                      min_score: float = 0.3) -> list[KgCandidate]:
    """Candidates ranked by label similarity with a time-overlap bonus."""
    if not label:
        raise ValueError("label must be non-empty")
    out = []
    for entity in source.candidates_for(label):
        score = score_entity(label, time, entity, embed_backend)
        if score < min_score:
            continue
        out.append(KgCandidate(kg_id=entity.kg_id, kg_label=entity.label,
                               description=entity.description,
                               time=entity.time, score=score))
    out.sort(key=lambda c: (-c.score, c.kg_id))
    return out[:limit]


def _virtual_stub(label: str, time: TimeSpec | None) -> dict:
    return {
        "label": label,
        "time": time.to_obj() if time is not None else None,
        "event_type": None,
        "exportable": False,
    }


def classify_binding(label: str, time: TimeSpec | None,
                     candidates: list[KgCandidate],
                     thresholds: Thresholds | None = None) -> BindingResult:
    th = thresholds or Thresholds()
    if not candidates:
        return BindingResult(kind="none", virtual_subgraph=_virtual_stub(label, time),
                             confidence=1.0)
    top = candidates[0]
    runner = candidates[1].score if len(candidates) > 1 else 0.0
    gap = top.score - runner
    if top.score >= th.tau_direct and gap >= th.gap:
        return BindingResult(kind="direct", kg_id=top.kg_id, confidence=top.score,
                             candidates=list(candidates))
    if top.score >= th.tau_indirect:
        if top.score >= th.tau_direct:
            note = (f"ambiguous match: {top.kg_id} ({top.kg_label!r}) leads by only "
                    f"{gap:.3f} over the runner-up")
        else:
            note = (f"loss of focus: nearest entity {top.kg_id} ({top.kg_label!r}, "
                    f"score {top.score:.3f}) may be broader or narrower than the event")
        return BindingResult(kind="indirect", kg_id=top.kg_id, note=note,
                             confidence=top.score, candidates=list(candidates))
    return BindingResult(kind="none", virtual_subgraph=_virtual_stub(label, time),
                         confidence=1.0 - top.score, candidates=list(candidates))


# ---------------------------------------------------------------------------
# narrative binding
# ---------------------------------------------------------------------------

@dataclass
class BindingReport:
    ambiguities: list[dict] = field(default_factory=list)
    scope_flags: list[dict] = field(default_factory=list)
    imports: dict[str, list] = field(default_factory=dict)
    narratives_visited: list[str] = field(default_factory=list)


def bind_narrative(store: NarrativeStore, narrative_id: str, source,
                   thresholds: Thresholds | None = None, embed_backend=None
                   ) -> tuple[dict[str, BindingResult], BindingReport]:
    """Bind every event of the narrative and of all eta-reachable children.

    Narrative structure is never mutated; only binding annotations change.
    Each narrative is visited at most once (the eta graph is a DAG).
    """
    if narrative_id not in store.narratives:
        raise MissingNarrative(narrative_id)
    th = thresholds or Thresholds()
    bindings: dict[str, BindingResult] = {}
    report = BindingReport()
    visited: set[str] = set()
    stack = [narrative_id]
    while stack:
        nid = stack.pop()
        if nid in visited:
            continue
        visited.add(nid)
        report.narratives_visited.append(nid)
        narrative = store.narrative(nid)
        for eid in sorted(narrative.nodes):
            ev = store.events.get(eid)
            if ev is None or eid in bindings:
                continue
            candidates = search_candidates(source, ev.label, ev.time,
                                           embed_backend=embed_backend)
            result = classify_binding(ev.label, ev.time, candidates, th)
            if (len(candidates) >= 2
                    and candidates[0].score - candidates[1].score < th.gap
                    and candidates[1].score >= th.tau_indirect):
                report.ambiguities.append({
                    "event": eid, "label": ev.label,
                    "candidates": [(c.kg_id, round(c.score, 6)) for c in candidates[:2]],
                })
            if _looks_compound(ev.label):
                report.ambiguities.append({
                    "event": eid, "label": ev.label,
                    "compound_label": True,
                })
            bindings[eid] = result
            ev.binding = result
            if result.kind == "direct":
                report.imports[eid] = import_subgraph(store, source, result.kg_id,
                                                      narrative.narrator)
        stack.extend(sorted(narrative.eta.values(), reverse=True))
    _flag_recursive_scopes(store, narrative_id, bindings, source, report)
    return bindings, report


def import_subgraph(store: NarrativeStore, source, kg_id: str,
                    narrator: str) -> list[tuple[str, str, str]]:
    """Lazy import of a bound entity: label, time, and part-of/sub-event
    links. Attributed triples must be viewpoint-compatible with the narrator;
    unannotated triples pass."""
    entity = source.entity(kg_id)
    if entity is None:
        return []
    triples = [(kg_id, "label", entity.label)]
    if entity.time is not None:
        triples.append((kg_id, "time", json.dumps(entity.time.to_obj(), sort_keys=True)))
    for pred, target, attribution in entity.links:
        if pred not in ("part of", "has part", "sub-event", "has sub-event"):
            continue
        if attribution is not None:
            if (narrator not in store.viewpoints or attribution not in store.viewpoints
                    or not store.viewpoint_compatible(narrator, attribution)):
                continue
        triples.append((kg_id, pred, target))
    return triples


def _flag_recursive_scopes(store, root_id, bindings, source, report) -> None:
    """A recursive node bound to an entity whose time span is exceeded by the
    hull of its children's times likely binds too narrowly."""
    visited, stack = set(), [root_id]
    while stack:
        nid = stack.pop()
        if nid in visited:
            continue
        visited.add(nid)
        narrative = store.narratives[nid]
        for eid, child_id in sorted(narrative.eta.items()):
            stack.append(child_id)
            binding = bindings.get(eid)
            if binding is None or binding.kind == "none":
                continue
            entity = source.entity(binding.kg_id)
            if entity is None or entity.time is None:
                continue
            child = store.narratives[child_id]
            child_times = [store.events[e].time for e in child.nodes if e in store.events]
            hull = TimeSpec.hull(child_times)
            if hull.kind != "unknown" and not entity.time.contains(hull):
                report.scope_flags.append({
                    "event": eid,
                    "kg_id": binding.kg_id,
                    "reason": "children time hull exceeds the bound entity's span",
                })


_RX_YEARS = re.compile(r"\b(1\d{3}|2\d{3})\b")
_VERBISH = re.compile(
    r"\b\w+(?:ed|ces|ches|shes|rts|nds|lls|res|kes|ves|ses|tes|nes|les|gns)\b"
    r"|\b(?:launch|begin|end|sign|issue|declare|rule|attack|invade|announce|capture)\w*\b",
    re.IGNORECASE)


def _looks_compound(label: str) -> bool:
    """Heuristic for labels that actually describe two events."""
    years = set(_RX_YEARS.findall(label))
    if len(years) >= 2:
        return True
    if " and " in label.lower():
        parts = re.split(r"\band\b", label, flags=re.IGNORECASE)
        verbish = sum(1 for p in parts if _VERBISH.search(p))
        return verbish >= 2
    return False


def materialize_virtual(store: NarrativeStore, event_id: str,
                        narrative_id: str | None = None) -> dict:
    """Local-only subgraph for an event without a KG counterpart."""
    ev = store.events.get(event_id)
    if ev is None:
        raise KeyError(event_id)
    if ev.binding is not None and ev.binding.kind != "none":
        raise AlreadyBound(event_id)
    subgraph = _virtual_stub(ev.label, ev.time)
    subgraph["participants"] = [
        [store.entities[e].label if e in store.entities else e, role]
        for e, role in ev.participants
    ]
    if ev.location is not None:
        subgraph["location"] = ev.location
    members: list[str] = []
    if narrative_id is not None:
        child_id = store.narratives[narrative_id].eta.get(event_id)
        if child_id is not None:
            child = store.narratives[child_id]
            members = sorted(e for e in child.nodes if e in store.events)
    else:
        for n in store.narratives.values():
            child_id = n.eta.get(event_id)
            if child_id is not None:
                child = store.narratives[child_id]
                members = sorted(e for e in child.nodes if e in store.events)
                break
    if members:
        subgraph["members"] = members
    return subgraph
