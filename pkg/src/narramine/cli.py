"""Command-line interface: project layout, config, and the six subcommands.

Exit codes: 0 success, 1 user error (bad arguments, missing files, locked
project), 2 backend failure (LLM, embedding, or KG source unavailable).
"""

from __future__ import annotations

import contextlib
import json
import os
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import click

from . import binder as binder_ops
from . import compare as compare_ops
from . import dot as dot_ops
from . import miner as miner_ops
from .corpus import CorpusManifest, Document, ingest as ingest_op
from .errors import BackendUnavailable, NarramineError, SourceUnavailable
from .llm import CachedBackend, HttpBackend, MockBackend, ResponseCache
from .model import (
    NarrativeStore,
    TimeSpec,
    deserialize_store,
    serialize_narrative,
    serialize_store,
)
from .semantics import FixtureEmbeddingBackend, HttpEmbeddingBackend


class ProjectLocked(NarramineError):
    pass


@dataclass
class ProjectLayout:
    root: Path

    @property
    def config_path(self) -> Path:
        return self.root / "narramine.toml"

    def config(self) -> dict:
        if not self.config_path.exists():
            return {}
        return tomllib.loads(self.config_path.read_text(encoding="utf-8"))

    def path(self, relative: str) -> Path:
        p = Path(relative)
        return p if p.is_absolute() else self.root / p

    @property
    def store_path(self) -> Path:
        return self.path(self.config().get("project", {}).get("store", "store.json"))

    @property
    def documents_path(self) -> Path:
        return self.root / "documents.json"

    @property
    def reports_dir(self) -> Path:
        return self.path(self.config().get("project", {}).get("reports", "reports"))

    def load_store(self) -> NarrativeStore:
        if self.store_path.exists():
            return deserialize_store(self.store_path.read_text(encoding="utf-8"))
        return NarrativeStore.with_defaults()

    def save_store(self, store: NarrativeStore) -> None:
        self.store_path.write_text(serialize_store(store) + "\n", encoding="utf-8")

    def load_documents(self) -> list[Document]:
        if not self.documents_path.exists():
            raise NarramineError("no ingested documents; run `narramine ingest` first")
        data = json.loads(self.documents_path.read_text(encoding="utf-8"))
        return [Document(**rec) for rec in data["documents"]]

    def save_documents(self, documents: list[Document], rejections) -> None:
        self.documents_path.write_text(json.dumps({
            "documents": [vars(d) for d in documents],
            "rejections": [{"path": r.path, "reason": r.reason} for r in rejections],
        }, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@contextlib.contextmanager
def project_lock(layout: ProjectLayout):
    """One mutating command at a time per project root."""
    lock = layout.root / ".narramine.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ProjectLocked(f"project is locked by another command ({lock})") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(OSError):
            lock.unlink()


# ---------------------------------------------------------------------------
# backend construction from config
# ---------------------------------------------------------------------------

def build_llm_backend(layout: ProjectLayout):
    section = layout.config().get("llm", {})
    kind = section.get("backend", "mock")
    if kind == "mock":
        script = layout.path(section.get("script", "mock_llm.json"))
        if not script.exists():
            raise NarramineError(f"mock script not found: {script}")
        backend = MockBackend.from_file(script)
    elif kind == "http":
        backend = HttpBackend(section["endpoint"], section.get("model", "default"))
    else:
        raise NarramineError(f"unknown llm backend: {kind!r}")
    cache_dir = section.get("cache_dir")
    if cache_dir:
        backend = CachedBackend(backend, ResponseCache(layout.path(cache_dir)))
    return backend


def build_embed_backend(layout: ProjectLayout):
    section = layout.config().get("embeddings", {})
    kind = section.get("backend", "fixture")
    if kind == "fixture":
        table = layout.path(section.get("table", "embeddings.json"))
        if not table.exists():
            raise NarramineError(f"embedding table not found: {table}")
        return FixtureEmbeddingBackend.from_file(table)
    if kind == "http":
        return HttpEmbeddingBackend(section["endpoint"], int(section["dimension"]))
    raise NarramineError(f"unknown embedding backend: {kind!r}")


def build_kg_source(layout: ProjectLayout, kind: str | None = None):
    section = layout.config().get("binding", {})
    kind = kind or section.get("source", "snapshot")
    if kind == "snapshot":
        snapshot = layout.path(section.get("snapshot", "kg_snapshot.json"))
        if not snapshot.exists():
            raise NarramineError(f"KG snapshot not found: {snapshot}")
        return binder_ops.KgSnapshot.from_file(snapshot)
    if kind == "wiki":
        return binder_ops.WikiLiveSource(layout.path(section.get("wiki_cache", "kg_cache")))
    raise NarramineError(f"unknown KG source: {kind!r}")


def _thresholds(layout: ProjectLayout) -> binder_ops.Thresholds:
    section = layout.config().get("binding", {})
    return binder_ops.Thresholds(
        tau_direct=float(section.get("tau_direct", 0.9)),
        tau_indirect=float(section.get("tau_indirect", 0.6)),
        gap=float(section.get("gap", 0.05)))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

@click.group(name="narramine")
@click.option("--root", type=click.Path(file_okay=False, path_type=Path),
              default=Path("."), help="Project root directory.")
@click.pass_context
def cli(ctx, root: Path):
    """Mine, bind, and compare viewpoint-specific event narratives."""
    ctx.obj = ProjectLayout(root=root)


@cli.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_obj
def ingest(layout: ProjectLayout, manifest: Path):
    """Read a manifest of documents, filter by length, persist the corpus."""
    section = layout.config().get("corpus", {})
    with project_lock(layout):
        docs, rejections = ingest_op(
            CorpusManifest.load(manifest),
            min_chars=int(section.get("min_chars", 1000)),
            max_chars=int(section.get("max_chars", 8000)))
        layout.save_documents(docs, rejections)
    click.echo(f"ingested {len(docs)} documents ({len(rejections)} rejected)")


@cli.command()
@click.option("--event", required=True, help="Complex event to mine.")
@click.option("--viewpoint", required=True, help="Viewpoint whose documents to use.")
@click.option("--depth", type=int, default=None, help="Recursion depth.")
@click.pass_obj
def mine(layout: ProjectLayout, event: str, viewpoint: str, depth: int | None):
    """Mine one narrative for an (event, viewpoint) pair."""
    section = layout.config().get("mining", {})
    config = miner_ops.MineConfig(
        event_name=event,
        timespan=TimeSpec.year_span(int(section.get("start_year", 2001)),
                                    int(section.get("end_year", 2005))),
        viewpoint=viewpoint,
        max_recursion_depth=depth if depth is not None else int(section.get("depth", 1)),
        min_cluster_size=int(section.get("min_cluster_size", 2)),
        min_samples=int(section.get("min_samples", 2)),
        epsilon=float(section.get("epsilon", 0.1)),
        merge_threshold=float(section.get("merge_threshold", 0.8)))
    with project_lock(layout):
        store = layout.load_store()
        narrative_id, report = miner_ops.mine(
            config, store, layout.load_documents(),
            build_llm_backend(layout), build_embed_backend(layout))
        layout.save_store(store)
        layout.reports_dir.mkdir(parents=True, exist_ok=True)
        (layout.reports_dir / f"mine-{narrative_id}.json").write_text(
            report.to_json(), encoding="utf-8")
    click.echo(narrative_id)


@cli.command()
@click.option("--narrative", required=True, help="Narrative id to bind.")
@click.option("--source", type=click.Choice(["snapshot", "wiki"]), default=None)
@click.pass_obj
def bind(layout: ProjectLayout, narrative: str, source: str | None):
    """Bind narrative events to knowledge-graph entities."""
    with project_lock(layout):
        store = layout.load_store()
        bindings, report = binder_ops.bind_narrative(
            store, narrative, build_kg_source(layout, source),
            thresholds=_thresholds(layout))
        layout.save_store(store)
        layout.reports_dir.mkdir(parents=True, exist_ok=True)
        (layout.reports_dir / f"bind-{narrative}.json").write_text(json.dumps({
            "bindings": {eid: b.to_obj() for eid, b in sorted(bindings.items())},
            "ambiguities": report.ambiguities,
            "scope_flags": report.scope_flags,
        }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    counts = {"direct": 0, "indirect": 0, "none": 0}
    for b in bindings.values():
        counts[b.kind] += 1
    click.echo(f"bound {len(bindings)} events: "
               f"{counts['direct']} direct, {counts['indirect']} indirect, "
               f"{counts['none']} unbound")


@cli.command()
@click.option("--narratives", "narratives", required=True, multiple=True,
              help="Narrative id (repeatable).")
@click.option("--dot", "dot_out", type=click.Path(dir_okay=False, path_type=Path),
              default=None, help="Also write a side-by-side DOT rendering.")
@click.pass_obj
def compare(layout: ProjectLayout, narratives: tuple[str, ...], dot_out: Path | None):
    """Report commonalities, unique events, and starts across narratives."""
    if len(narratives) < 2:
        raise NarramineError("compare needs at least two --narratives")
    store = layout.load_store()
    threshold = float(layout.config().get("compare", {}).get("sim_threshold", 0.8))
    embed_backend = build_embed_backend(layout)
    report = compare_ops.comparison_report(store, list(narratives), embed_backend,
                                           sim_threshold=threshold)
    layout.reports_dir.mkdir(parents=True, exist_ok=True)
    (layout.reports_dir / "compare.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if dot_out is not None:
        pairs = []
        for group in report["commonalities"]:
            for a, b in zip(group, group[1:]):
                pairs.append((a["event"], b["event"]))
        dot_out.write_text(dot_ops.comparison_dot(store, list(narratives), pairs),
                           encoding="utf-8")
    click.echo(json.dumps(report, indent=2, sort_keys=True))


@cli.command()
@click.option("--narrative", required=True, help="Narrative id to export.")
@click.option("--format", "fmt", type=click.Choice(["json", "dot"]), default="json")
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path),
              default=None, help="Write to a file instead of stdout.")
@click.pass_obj
def export(layout: ProjectLayout, narrative: str, fmt: str, output: Path | None):
    """Export a narrative as canonical JSON or Graphviz DOT. Read-only."""
    store = layout.load_store()
    if fmt == "json":
        text = serialize_narrative(store, narrative)
    else:
        text = dot_ops.narrative_dot(store, narrative)
    if output is not None:
        output.write_text(text, encoding="utf-8")
        click.echo(f"wrote {output}")
    else:
        click.echo(text, nl=False)


@cli.command()
@click.argument("action", type=click.Choice(["clear", "stats"]))
@click.pass_obj
def cache(layout: ProjectLayout, action: str):
    """Manage the LLM response cache."""
    cache_dir = layout.config().get("llm", {}).get("cache_dir", "cache")
    response_cache = ResponseCache(layout.path(cache_dir))
    if action == "clear":
        click.echo(f"cleared {response_cache.clear()} entries")
    else:
        click.echo(json.dumps(response_cache.stats(), sort_keys=True))


def main(argv=None) -> int:
    """Entry point mapping errors to exit codes (0 ok, 1 user, 2 backend)."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except (BackendUnavailable, SourceUnavailable) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except NarramineError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return 1
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
