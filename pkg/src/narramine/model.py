"""Narrative graph model: events, entities, viewpoints, recursive narratives.

A narrative is a directed edge-labeled graph whose nodes are events,
entities, and literals.  Narrative edges connect events with events and
carry a predicate from a registered vocabulary; factual edges attach
entities and literals to events or entities.  Each event may point to a
child narrative describing its inner structure (a "recursive node"),
and the reachability relation over those pointers is kept acyclic.
"""

from __future__ import annotations

import datetime as _dt
import json
import threading
from dataclasses import dataclass, field

from .errors import (
    CycleDetected,
    EndpointNotEvent,
    MissingNarrative,
    MissingNode,
    SelfLoopRejected,
    UnknownPredicate,
    UnknownViewpoint,
)

# Relationship categories. Contingency implies Temporal implies Association.
TEMPORAL = "Temporal"
CONTINGENCY = "Contingency"
ASSOCIATION = "Association"

CATEGORIES = (TEMPORAL, CONTINGENCY, ASSOCIATION)

_IMPLICATIONS = {
    CONTINGENCY: frozenset({TEMPORAL, ASSOCIATION}),
    TEMPORAL: frozenset({ASSOCIATION}),
    ASSOCIATION: frozenset(),
}

# Predicates whose subject is the temporally *later* event.  Used when
# orienting temporal edges into a precedence order.
AFTER_PREDICATES = frozenset({"after", "happened after"})

# Default narrative-relationship vocabulary.  "happened after" is included
# alongside the base labels because the mining pipeline emits it by default.
DEFAULT_NARRATIVE_PREDICATES = (
    ("before", TEMPORAL),
    ("after", TEMPORAL),
    ("during", TEMPORAL),
    ("happened after", TEMPORAL),
    ("caused by", CONTINGENCY),
    ("lead to", CONTINGENCY),
    ("has effect", CONTINGENCY),
    ("associated with", ASSOCIATION),
)

DEFAULT_FACTUAL_RELATIONS = frozenset(
    {"participant", "location", "agent", "target", "mentions", "property"}
)


def category_implications(category: str) -> set[str]:
    """Categories implied by `category` (exclusive of itself)."""
    if category not in _IMPLICATIONS:
        raise ValueError(f"unknown relationship category: {category!r}")
    return set(_IMPLICATIONS[category])


# ---------------------------------------------------------------------------
# time
# ---------------------------------------------------------------------------

_GRANULARITIES = ("day", "month", "year")
_KINDS = ("instant", "interval", "year", "unknown")


@dataclass(frozen=True)
class TimeSpec:
    """Point, span, year, or unknown time with a calendar granularity."""

    kind: str = "unknown"
    start: _dt.date | None = None
    end: _dt.date | None = None
    granularity: str = "day"

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"bad TimeSpec kind: {self.kind!r}")
        if self.granularity not in _GRANULARITIES:
            raise ValueError(f"bad TimeSpec granularity: {self.granularity!r}")
        if self.kind == "unknown":
            if self.start is not None or self.end is not None:
                raise ValueError("unknown TimeSpec must not carry dates")
        elif self.kind == "interval":
            if self.start is None or self.end is None:
                raise ValueError("interval TimeSpec needs start and end")
            if self.start > self.end:
                raise ValueError("interval TimeSpec start must be <= end")
        else:  # instant, year
            if self.start is None:
                raise ValueError(f"{self.kind} TimeSpec needs a start date")
            if self.end is not None and self.end != self.start:
                raise ValueError(f"{self.kind} TimeSpec end must equal start")

    # constructors -----------------------------------------------------
    @staticmethod
    def unknown() -> "TimeSpec":
        return TimeSpec()

    @staticmethod
    def year(y: int) -> "TimeSpec":
        return TimeSpec(kind="year", start=_dt.date(y, 1, 1), granularity="year")

    @staticmethod
    def instant(d: _dt.date, granularity: str = "day") -> "TimeSpec":
        return TimeSpec(kind="instant", start=d, granularity=granularity)

    @staticmethod
    def month(y: int, m: int) -> "TimeSpec":
        return TimeSpec.instant(_dt.date(y, m, 1), granularity="month")

    @staticmethod
    def interval(start: _dt.date, end: _dt.date, granularity: str = "day") -> "TimeSpec":
        return TimeSpec(kind="interval", start=start, end=end, granularity=granularity)

    @staticmethod
    def year_span(y1: int, y2: int) -> "TimeSpec":
        return TimeSpec.interval(_dt.date(y1, 1, 1), _dt.date(y2, 12, 31), granularity="year")

    # calendar extent ---------------------------------------------------
    def bounds(self) -> tuple[_dt.date, _dt.date] | None:
        """Inclusive calendar extent, widened to the granularity. None if unknown."""
        if self.kind == "unknown":
            return None
        lo = self.start
        hi = self.end if self.end is not None else self.start
        if self.kind == "year" or self.granularity == "year":
            lo = _dt.date(lo.year, 1, 1)
            hi = _dt.date(hi.year, 12, 31)
        elif self.granularity == "month":
            lo = _dt.date(lo.year, lo.month, 1)
            hi = _last_of_month(hi)
        return lo, hi

    def overlaps(self, other: "TimeSpec") -> bool:
        a, b = self.bounds(), other.bounds()
        if a is None or b is None:
            return False
        return a[0] <= b[1] and b[0] <= a[1]

    def contains(self, other: "TimeSpec") -> bool:
        a, b = self.bounds(), other.bounds()
        if a is None or b is None:
            return False
        return a[0] <= b[0] and b[1] <= a[1]

    def sort_key(self):
        """Orders known times chronologically; unknown sorts last."""
        b = self.bounds()
        if b is None:
            return (1, _dt.date.max, _dt.date.max)
        return (0, b[0], b[1])

    @staticmethod
    def hull(specs: list["TimeSpec"]) -> "TimeSpec":
        """Tightest TimeSpec covering every member with a known time."""
        spans = [s.bounds() for s in specs if s.bounds() is not None]
        if not spans:
            return TimeSpec.unknown()
        lo = min(s[0] for s in spans)
        hi = max(s[1] for s in spans)
        if lo == hi:
            return TimeSpec.instant(lo)
        if lo == _dt.date(lo.year, 1, 1) and hi == _dt.date(hi.year, 12, 31):
            if lo.year == hi.year:
                return TimeSpec.year(lo.year)
            return TimeSpec.year_span(lo.year, hi.year)
        return TimeSpec.interval(lo, hi)

    # serialization ------------------------------------------------------
    def to_obj(self) -> dict:
        obj = {"kind": self.kind, "granularity": self.granularity}
        if self.start is not None:
            obj["start"] = self.start.isoformat()
        if self.end is not None:
            obj["end"] = self.end.isoformat()
        return obj

    @staticmethod
    def from_obj(obj: dict) -> "TimeSpec":
        return TimeSpec(
            kind=obj["kind"],
            start=_dt.date.fromisoformat(obj["start"]) if "start" in obj else None,
            end=_dt.date.fromisoformat(obj["end"]) if "end" in obj else None,
            granularity=obj.get("granularity", "day"),
        )


def _last_of_month(d: _dt.date) -> _dt.date:
    if d.month == 12:
        return _dt.date(d.year, 12, 31)
    return _dt.date(d.year, d.month + 1, 1) - _dt.timedelta(days=1)


# ---------------------------------------------------------------------------
# nodes
# ---------------------------------------------------------------------------

@dataclass
class EntityRef:
    id: str
    label: str
    kg_id: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("entity id must be non-empty")


@dataclass
class Literal:
    """Typed scalar node (string, number, or date)."""

    id: str
    value: str | int | float
    value_type: str = "string"  # string | number | date

    def __post_init__(self):
        if self.value_type not in ("string", "number", "date"):
            raise ValueError(f"bad literal type: {self.value_type!r}")


@dataclass
class EventNode:
    id: str
    label: str
    time: TimeSpec = field(default_factory=TimeSpec.unknown)
    event_type: str | None = None
    participants: list[tuple[str, str]] = field(default_factory=list)  # (entity id, role)
    location: str | None = None  # entity or literal id
    provenance: list[tuple[str, tuple[int, int]]] = field(default_factory=list)
    binding: "object | None" = None  # binder.BindingResult, attached late

    def __post_init__(self):
        if not self.label:
            raise ValueError("event label must be non-empty")


@dataclass(frozen=True)
class RelationPredicate:
    label: str
    category: str

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"bad relationship category: {self.category!r}")


@dataclass
class Viewpoint:
    """Named stance-holder group within a group forest."""

    id: str
    members: set[str] = field(default_factory=set)
    parent: str | None = None
    stances: dict[str, str] = field(default_factory=dict)  # claim id -> valid|invalid


@dataclass
class Narrative:
    id: str
    narrator: str  # viewpoint id
    nodes: set[str] = field(default_factory=set)
    factual_edges: list[tuple[str, str, str]] = field(default_factory=list)
    narrative_edges: list[tuple[str, str, str]] = field(default_factory=list)
    eta: dict[str, str] = field(default_factory=dict)  # event id -> narrative id


@dataclass
class Violation:
    code: str
    severity: str  # "error" | "warning"
    message: str
    subject: str = ""


# ---------------------------------------------------------------------------
# store
# ---------------------------------------------------------------------------

class NarrativeStore:
    """Shared node tables, narratives, viewpoints, and the relation registry.

    Many concurrent readers are fine; mutating operations serialize on an
    internal lock.
    """

    def __init__(self):
        self._lock = threading.RLock()
        self.events: dict[str, EventNode] = {}
        self.entities: dict[str, EntityRef] = {}
        self.literals: dict[str, Literal] = {}
        self.narratives: dict[str, Narrative] = {}
        self.viewpoints: dict[str, Viewpoint] = {}
        self.narrative_predicates: dict[str, RelationPredicate] = {}
        self.factual_relations: set[str] = set()

    @staticmethod
    def with_defaults() -> "NarrativeStore":
        store = NarrativeStore()
        for label, category in DEFAULT_NARRATIVE_PREDICATES:
            store.register_predicate(label, category)
        store.factual_relations |= DEFAULT_FACTUAL_RELATIONS
        return store

    # --- registry -----------------------------------------------------
    def register_predicate(self, label: str, category: str) -> None:
        with self._lock:
            existing = self.narrative_predicates.get(label)
            if existing is not None and existing.category != category:
                raise ValueError(f"predicate {label!r} already registered as {existing.category}")
            self.narrative_predicates[label] = RelationPredicate(label, category)

    def register_factual_relation(self, label: str) -> None:
        with self._lock:
            self.factual_relations.add(label)

    def predicate_category(self, label: str) -> str:
        pred = self.narrative_predicates.get(label)
        if pred is None:
            raise UnknownPredicate(label)
        return pred.category

    # --- node/narrative helpers ----------------------------------------
    def add_event(self, event: EventNode) -> EventNode:
        with self._lock:
            if event.id in self.events or event.id in self.entities or event.id in self.literals:
                raise ValueError(f"node id already in use: {event.id}")
            self.events[event.id] = event
        return event

    def add_entity(self, entity: EntityRef) -> EntityRef:
        with self._lock:
            if entity.id in self.events or entity.id in self.entities or entity.id in self.literals:
                raise ValueError(f"node id already in use: {entity.id}")
            self.entities[entity.id] = entity
        return entity

    def add_literal(self, literal: Literal) -> Literal:
        with self._lock:
            if literal.id in self.events or literal.id in self.entities or literal.id in self.literals:
                raise ValueError(f"node id already in use: {literal.id}")
            self.literals[literal.id] = literal
        return literal

    def add_viewpoint(self, viewpoint: Viewpoint) -> Viewpoint:
        with self._lock:
            if viewpoint.parent is not None and viewpoint.parent not in self.viewpoints:
                raise UnknownViewpoint(viewpoint.parent)
            previous = self.viewpoints.get(viewpoint.id)
            self.viewpoints[viewpoint.id] = viewpoint
            if self._viewpoint_has_cycle(viewpoint.id):
                if previous is None:
                    del self.viewpoints[viewpoint.id]
                else:
                    self.viewpoints[viewpoint.id] = previous
                raise CycleDetected(f"viewpoint hierarchy cycle at {viewpoint.id}")
        return viewpoint

    def _viewpoint_has_cycle(self, start: str) -> bool:
        seen = set()
        cur = start
        while cur is not None:
            if cur in seen:
                return True
            seen.add(cur)
            vp = self.viewpoints.get(cur)
            cur = vp.parent if vp is not None else None
        return False

    def add_narrative(self, narrative: Narrative) -> Narrative:
        with self._lock:
            if narrative.id in self.narratives:
                raise ValueError(f"narrative id already in use: {narrative.id}")
            if narrative.narrator not in self.viewpoints:
                raise UnknownViewpoint(narrative.narrator)
            self.narratives[narrative.id] = narrative
        return narrative

    def narrative(self, narrative_id: str) -> Narrative:
        n = self.narratives.get(narrative_id)
        if n is None:
            raise MissingNarrative(narrative_id)
        return n

    def node_kind(self, node_id: str) -> str | None:
        if node_id in self.events:
            return "event"
        if node_id in self.entities:
            return "entity"
        if node_id in self.literals:
            return "literal"
        return None

    # --- narrative operations -------------------------------------------
    def add_narrative_edge(self, narrative_id: str, src_event: str,
                           predicate_label: str, dst_event: str) -> None:
        with self._lock:
            n = self.narrative(narrative_id)
            if predicate_label not in self.narrative_predicates:
                raise UnknownPredicate(predicate_label)
            for node in (src_event, dst_event):
                if node not in n.nodes:
                    raise MissingNode(f"{node} not in narrative {narrative_id}")
                if node not in self.events:
                    raise EndpointNotEvent(node)
            if src_event == dst_event:
                raise SelfLoopRejected(src_event)
            n.narrative_edges.append((src_event, predicate_label, dst_event))

    def add_factual_edge(self, narrative_id: str, src: str, relation: str, dst: str) -> None:
        with self._lock:
            n = self.narrative(narrative_id)
            if relation not in self.factual_relations:
                raise UnknownPredicate(relation)
            for node in (src, dst):
                if node not in n.nodes:
                    raise MissingNode(f"{node} not in narrative {narrative_id}")
            if self.node_kind(src) == "literal":
                raise ValueError("factual edge source must be an event or entity")
            if self.node_kind(dst) == "event":
                raise ValueError("factual edge target must be an entity or literal")
            n.factual_edges.append((src, relation, dst))

    def set_eta(self, narrative_id: str, event_id: str, child_narrative_id: str) -> None:
        with self._lock:
            n = self.narrative(narrative_id)
            if event_id not in n.nodes or event_id not in self.events:
                raise MissingNode(f"{event_id} is not an event of narrative {narrative_id}")
            self.narrative(child_narrative_id)  # must exist
            if child_narrative_id == narrative_id or self._eta_reaches(child_narrative_id, narrative_id):
                raise CycleDetected(
                    f"setting eta({event_id}) -> {child_narrative_id} would close a cycle")
            n.eta[event_id] = child_narrative_id

    def _eta_reaches(self, src: str, dst: str) -> bool:
        stack, seen = [src], set()
        while stack:
            cur = stack.pop()
            if cur == dst:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            n = self.narratives.get(cur)
            if n is not None:
                stack.extend(n.eta.values())
        return False

    def eta(self, event_id: str, narrative_id: str) -> Narrative | None:
        """Child narrative for a recursive node; None for leaf events."""
        n = self.narrative(narrative_id)
        if event_id not in n.nodes or event_id not in self.events:
            raise MissingNode(f"{event_id} is not an event of narrative {narrative_id}")
        child = n.eta.get(event_id)
        return self.narratives[child] if child is not None else None

    # --- validation --------------------------------------------------------
    def validate_narrative(self, narrative_id: str) -> list[Violation]:
        n = self.narrative(narrative_id)
        out: list[Violation] = []

        if n.narrator not in self.viewpoints:
            out.append(Violation("narrator-unknown", "error",
                                 f"narrator {n.narrator!r} not in store", n.id))
        for node in sorted(n.nodes):
            if self.node_kind(node) is None:
                out.append(Violation("node-unresolved", "error",
                                     f"node {node!r} not in store", node))
        for src, pred, dst in n.narrative_edges:
            if pred not in self.narrative_predicates:
                out.append(Violation("predicate-unknown", "error",
                                     f"narrative edge predicate {pred!r} unregistered", pred))
            for endpoint in (src, dst):
                if self.node_kind(endpoint) != "event":
                    out.append(Violation("R_N-endpoint", "error",
                                         f"narrative edge endpoint {endpoint!r} is not an event",
                                         endpoint))
        for src, rel, dst in n.factual_edges:
            if rel not in self.factual_relations:
                out.append(Violation("factual-relation-unknown", "error",
                                     f"factual relation {rel!r} unregistered", rel))
            if self.node_kind(src) == "literal":
                out.append(Violation("R_F-endpoint", "error",
                                     f"factual edge source {src!r} is a literal", src))
            if self.node_kind(dst) == "event":
                out.append(Violation("R_F-endpoint", "error",
                                     f"factual edge target {dst!r} is an event", dst))
        for event_id, child_id in sorted(n.eta.items()):
            if event_id not in n.nodes or self.node_kind(event_id) != "event":
                out.append(Violation("eta-key", "error",
                                     f"eta key {event_id!r} is not an event of the narrative",
                                     event_id))
                continue
            child = self.narratives.get(child_id)
            if child is None:
                out.append(Violation("eta-target", "error",
                                     f"eta target narrative {child_id!r} missing", child_id))
                continue
            # time containment: child events with known time should lie
            # within a recursive node's own span.  Warnings only: mined
            # narratives may legitimately carry wrong dates.
            parent_time = self.events[event_id].time
            if parent_time.kind in ("interval", "year"):
                for node in sorted(child.nodes):
                    ev = self.events.get(node)
                    if ev is None or ev.time.bounds() is None:
                        continue
                    if not parent_time.contains(ev.time):
                        out.append(Violation(
                            "time-containment", "warning",
                            f"event {ev.id!r} ({ev.label}) falls outside the span of "
                            f"its parent recursive node {event_id!r}", ev.id))
        for node in sorted(n.nodes):
            ev = self.events.get(node)
            if ev is None:
                continue
            for entity_id, role in ev.participants:
                if role not in self.factual_relations:
                    out.append(Violation("role-unregistered", "error",
                                         f"participant role {role!r} unregistered", ev.id))
                if entity_id not in self.entities:
                    out.append(Violation("participant-unresolved", "error",
                                         f"participant {entity_id!r} not an entity", ev.id))
        return out

    # --- viewpoints ---------------------------------------------------------
    def viewpoint_ancestors(self, viewpoint_id: str) -> list[str]:
        if viewpoint_id not in self.viewpoints:
            raise UnknownViewpoint(viewpoint_id)
        chain, cur = [], viewpoint_id
        while cur is not None and cur not in chain:
            chain.append(cur)
            cur = self.viewpoints[cur].parent if cur in self.viewpoints else None
        return chain

    def viewpoint_compatible(self, v1: str, v2: str) -> bool:
        a = set(self.viewpoint_ancestors(v1))
        b = set(self.viewpoint_ancestors(v2))
        return bool(a & b)

    def aggregate_stance(self, group_viewpoints: list[str], claim_id: str) -> str:
        votes = {"valid": 0, "invalid": 0}
        for vid in group_viewpoints:
            if vid not in self.viewpoints:
                raise UnknownViewpoint(vid)
            stance = self.viewpoints[vid].stances.get(claim_id)
            if stance in votes:
                votes[stance] += 1
        if votes["valid"] > votes["invalid"]:
            return "valid"
        if votes["invalid"] > votes["valid"]:
            return "invalid"
        return "undetermined"

    # --- equality ------------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, NarrativeStore):
            return NotImplemented
        return serialize_store(self) == serialize_store(other)

    def __ne__(self, other):
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq


# Module-level wrappers mirroring the operation signatures used elsewhere.

def add_narrative_edge(store, narrative_id, src_event, predicate_label, dst_event):
    store.add_narrative_edge(narrative_id, src_event, predicate_label, dst_event)
    return store


def set_eta(store, narrative_id, event_id, child_narrative_id):
    store.set_eta(narrative_id, event_id, child_narrative_id)
    return store


def eta(store, event_id, narrative_id):
    return store.eta(event_id, narrative_id)


def validate_narrative(store, narrative_id):
    return store.validate_narrative(narrative_id)


def viewpoint_compatible(store, v1, v2):
    return store.viewpoint_compatible(v1, v2)


def aggregate_stance(store, group_viewpoints, claim_id):
    return store.aggregate_stance(group_viewpoints, claim_id)


# ---------------------------------------------------------------------------
# canonical JSON serialization
# ---------------------------------------------------------------------------

def _event_obj(ev: EventNode) -> dict:
    obj = {
        "id": ev.id,
        "label": ev.label,
        "time": ev.time.to_obj(),
        "participants": [[e, r] for e, r in ev.participants],
        "provenance": [[doc, [a, b]] for doc, (a, b) in ev.provenance],
    }
    if ev.event_type is not None:
        obj["event_type"] = ev.event_type
    if ev.location is not None:
        obj["location"] = ev.location
    if ev.binding is not None:
        obj["binding"] = ev.binding.to_obj()
    return obj


def _event_from_obj(obj: dict) -> EventNode:
    from .binder import BindingResult  # late import: binder depends on model

    binding = BindingResult.from_obj(obj["binding"]) if "binding" in obj else None
    return EventNode(
        id=obj["id"],
        label=obj["label"],
        time=TimeSpec.from_obj(obj["time"]),
        event_type=obj.get("event_type"),
        participants=[(e, r) for e, r in obj.get("participants", [])],
        location=obj.get("location"),
        provenance=[(doc, (a, b)) for doc, (a, b) in obj.get("provenance", [])],
        binding=binding,
    )


def store_to_obj(store: NarrativeStore) -> dict:
    return {
        "entities": [
            {"id": e.id, "label": e.label, **({"kg_id": e.kg_id} if e.kg_id else {})}
            for e in sorted(store.entities.values(), key=lambda e: e.id)
        ],
        "events": [_event_obj(ev) for ev in sorted(store.events.values(), key=lambda e: e.id)],
        "factual_relations": sorted(store.factual_relations),
        "literals": [
            {"id": l.id, "value": l.value, "value_type": l.value_type}
            for l in sorted(store.literals.values(), key=lambda l: l.id)
        ],
        "narratives": [
            {
                "id": n.id,
                "narrator": n.narrator,
                "nodes": sorted(n.nodes),
                "factual_edges": [[s, p, d] for s, p, d in n.factual_edges],
                "narrative_edges": [[s, p, d] for s, p, d in n.narrative_edges],
                "eta": {k: v for k, v in sorted(n.eta.items())},
            }
            for n in sorted(store.narratives.values(), key=lambda n: n.id)
        ],
        "relations": [
            {"category": p.category, "label": p.label}
            for p in sorted(store.narrative_predicates.values(), key=lambda p: p.label)
        ],
        "viewpoints": [
            {
                "id": v.id,
                "members": sorted(v.members),
                "parent": v.parent,
                "stances": {k: s for k, s in sorted(v.stances.items())},
            }
            for v in sorted(store.viewpoints.values(), key=lambda v: v.id)
        ],
    }


def serialize_store(store: NarrativeStore) -> str:
    """Canonical JSON: sorted keys, sorted collections, compact separators."""
    return json.dumps(store_to_obj(store), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def store_from_obj(obj: dict) -> NarrativeStore:
    store = NarrativeStore()
    for rel in obj.get("relations", []):
        store.narrative_predicates[rel["label"]] = RelationPredicate(rel["label"], rel["category"])
    store.factual_relations = set(obj.get("factual_relations", []))
    for e in obj.get("entities", []):
        store.entities[e["id"]] = EntityRef(e["id"], e["label"], e.get("kg_id"))
    for l in obj.get("literals", []):
        store.literals[l["id"]] = Literal(l["id"], l["value"], l["value_type"])
    for ev in obj.get("events", []):
        store.events[ev["id"]] = _event_from_obj(ev)
    for v in obj.get("viewpoints", []):
        store.viewpoints[v["id"]] = Viewpoint(
            id=v["id"], members=set(v.get("members", [])),
            parent=v.get("parent"), stances=dict(v.get("stances", {})))
    for n in obj.get("narratives", []):
        store.narratives[n["id"]] = Narrative(
            id=n["id"], narrator=n["narrator"], nodes=set(n["nodes"]),
            factual_edges=[tuple(e) for e in n.get("factual_edges", [])],
            narrative_edges=[tuple(e) for e in n.get("narrative_edges", [])],
            eta=dict(n.get("eta", {})))
    return store


def deserialize_store(text: str) -> NarrativeStore:
    return store_from_obj(json.loads(text))


def narrative_to_obj(store: NarrativeStore, narrative_id: str,
                     include_children: bool = True) -> dict:
    """Narrative plus its nodes (and, optionally, the eta-reachable subtree)."""
    seen: list[str] = []

    def visit(nid: str):
        if nid in seen:
            return
        seen.append(nid)
        if include_children:
            for child in sorted(store.narrative(nid).eta.values()):
                visit(child)

    visit(narrative_id)
    node_ids = sorted({node for nid in seen for node in store.narratives[nid].nodes})
    return {
        "entities": [
            {"id": e.id, "label": e.label, **({"kg_id": e.kg_id} if e.kg_id else {})}
            for i in node_ids if (e := store.entities.get(i)) is not None
        ],
        "events": [_event_obj(store.events[i]) for i in node_ids if i in store.events],
        "literals": [
            {"id": l.id, "value": l.value, "value_type": l.value_type}
            for i in node_ids if (l := store.literals.get(i)) is not None
        ],
        "narratives": [
            {
                "id": n.id,
                "narrator": n.narrator,
                "nodes": sorted(n.nodes),
                "factual_edges": [[s, p, d] for s, p, d in n.factual_edges],
                "narrative_edges": [[s, p, d] for s, p, d in n.narrative_edges],
                "eta": {k: v for k, v in sorted(n.eta.items())},
            }
            for nid in sorted(seen) if (n := store.narratives[nid])
        ],
        "root": narrative_id,
    }


def serialize_narrative(store: NarrativeStore, narrative_id: str,
                        include_children: bool = True) -> str:
    return json.dumps(narrative_to_obj(store, narrative_id, include_children),
                      sort_keys=True, indent=2, ensure_ascii=False) + "\n"
