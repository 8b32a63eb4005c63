"""Graphviz DOT rendering of narratives and comparisons.

Recursive event nodes render as subgraph clusters containing their child
narrative; in comparison renderings each viewpoint gets a border color and
aligned events are tied together with dashed edges.
"""

from __future__ import annotations

from .model import NarrativeStore

VIEWPOINT_COLORS = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
)


def _q(text: str) -> str:
    # backslashes are kept verbatim so label text may use DOT escapes like \n
    return '"' + text.replace('"', '\\"') + '"'


def _event_line(store: NarrativeStore, event_id: str, indent: str,
                color: str | None = None) -> str:
    ev = store.events[event_id]
    label = ev.label
    if ev.time.bounds() is not None:
        label += f"\\n{ev.time.bounds()[0].isoformat()}"
    attrs = [f"label={_q(label)}", "shape=box"]
    if ev.binding is not None and ev.binding.kind != "none":
        attrs.append(f"tooltip={_q(ev.binding.kg_id)}")
    if color is not None:
        attrs.append(f"color={_q(color)}")
        attrs.append("penwidth=2")
    return f"{indent}{_q(event_id)} [{', '.join(attrs)}];"


def _render_narrative(store: NarrativeStore, narrative_id: str, lines: list[str],
                      indent: str, color: str | None, seen: set[str]) -> None:
    if narrative_id in seen:
        return
    seen.add(narrative_id)
    narrative = store.narrative(narrative_id)
    for event_id in sorted(e for e in narrative.nodes if e in store.events):
        lines.append(_event_line(store, event_id, indent, color))
        child_id = narrative.eta.get(event_id)
        if child_id is not None and child_id not in seen:
            lines.append(f"{indent}subgraph {_q('cluster_' + child_id)} {{")
            lines.append(f"{indent}  label={_q(store.events[event_id].label)};")
            lines.append(f"{indent}  style=dashed;")
            _render_narrative(store, child_id, lines, indent + "  ", color, seen)
            lines.append(f"{indent}}}")
            lines.append(f"{indent}{_q(event_id)} -> "
                         f"{_q(min(e for e in store.narratives[child_id].nodes if e in store.events))}"
                         " [style=dotted, arrowhead=odot];")
    for src, pred, dst in sorted(narrative.narrative_edges):
        lines.append(f"{indent}{_q(src)} -> {_q(dst)} [label={_q(pred)}];")


def narrative_dot(store: NarrativeStore, narrative_id: str) -> str:
    """Single narrative (and its recursion subtree) as a DOT digraph."""
    lines = [f"digraph {_q(narrative_id)} {{",
             "  rankdir=TB;",
             "  node [fontname=Helvetica];"]
    _render_narrative(store, narrative_id, lines, "  ", None, set())
    lines.append("}")
    return "\n".join(lines) + "\n"


def comparison_dot(store: NarrativeStore, narrative_ids: list[str],
                   alignments: list[tuple[str, str]] | None = None) -> str:
    """Side-by-side narratives, one cluster per viewpoint, border colors per
    narrator; `alignments` pairs of event ids render as dashed cross links."""
    ids = sorted(set(narrative_ids))
    lines = ["digraph comparison {",
             "  rankdir=TB;",
             "  node [fontname=Helvetica];",
             "  compound=true;"]
    for i, nid in enumerate(ids):
        color = VIEWPOINT_COLORS[i % len(VIEWPOINT_COLORS)]
        narrator = store.narrative(nid).narrator
        lines.append(f"  subgraph {_q('cluster_' + nid)} {{")
        lines.append(f"    label={_q(narrator)};")
        lines.append(f"    color={_q(color)};")
        _render_narrative(store, nid, lines, "    ", color, set())
        lines.append("  }")
    for a, b in sorted(alignments or []):
        lines.append(f"  {_q(a)} -> {_q(b)} "
                     "[style=dashed, dir=none, constraint=false];")
    lines.append("}")
    return "\n".join(lines) + "\n"
