"""Document ingestion: manifest reading, length filtering, viewpoint selection."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UnknownViewpoint


@dataclass
class Document:
    id: str
    viewpoint: str
    outlet: str
    url: str
    title: str
    body: str

    @property
    def char_count(self) -> int:
        return len(self.body)


@dataclass
class ManifestEntry:
    path: str
    viewpoint: str
    outlet: str = ""
    url: str = ""
    exclude: bool = False
    title: str = ""


@dataclass
class Rejection:
    path: str
    reason: str


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    base_dir: Path = field(default_factory=Path)

    @staticmethod
    def load(path: str | Path) -> "CorpusManifest":
        """Line-delimited JSON records {path, viewpoint, outlet, url[, exclude, title]}."""
        path = Path(path)
        entries = []
        for line in path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            entries.append(ManifestEntry(
                path=rec["path"], viewpoint=rec["viewpoint"],
                outlet=rec.get("outlet", ""), url=rec.get("url", ""),
                exclude=bool(rec.get("exclude", False)), title=rec.get("title", "")))
        return CorpusManifest(entries=entries, base_dir=path.parent)


def document_id(url: str, body: str) -> str:
    """Content hash; stable across runs for identical inputs."""
    return hashlib.sha256((url + "\x00" + body).encode("utf-8")).hexdigest()[:16]


def ingest(manifest: CorpusManifest, min_chars: int = 1000,
           max_chars: int = 8000) -> tuple[list[Document], list[Rejection]]:
    """Read manifest files, keep bodies with min_chars <= len <= max_chars.

    Unreadable files and out-of-bounds documents are collected as rejections,
    never raised. Output is sorted by document id regardless of read order.
    """
    if min_chars >= max_chars:
        raise ValueError("min_chars must be < max_chars")
    docs: list[Document] = []
    rejected: list[Rejection] = []
    for entry in manifest.entries:
        if entry.exclude:
            rejected.append(Rejection(entry.path, "excluded by manifest"))
            continue
        file_path = Path(entry.path)
        if not file_path.is_absolute():
            file_path = manifest.base_dir / file_path
        try:
            text = file_path.read_text(encoding="utf-8")
        except OSError as exc:
            rejected.append(Rejection(entry.path, f"unreadable: {exc.__class__.__name__}"))
            continue
        title, body = _split_title(text, entry.title)
        n = len(body)
        if n < min_chars:
            rejected.append(Rejection(entry.path, f"too short ({n} < {min_chars})"))
            continue
        if n > max_chars:
            rejected.append(Rejection(entry.path, f"too long ({n} > {max_chars})"))
            continue
        docs.append(Document(
            id=document_id(entry.url, body), viewpoint=entry.viewpoint,
            outlet=entry.outlet, url=entry.url, title=title, body=body))
    docs.sort(key=lambda d: d.id)
    return docs, rejected


def _split_title(text: str, given_title: str) -> tuple[str, str]:
    if given_title:
        return given_title, text
    # no structured title: first line is the title, the rest the body
    head, sep, rest = text.partition("\n")
    if sep and rest.strip():
        return head.strip(), rest.lstrip("\n")
    return "", text


def select_viewpoint(documents: list[Document], viewpoint_id: str,
                     known_viewpoints: "set[str] | None" = None) -> list[Document]:
    """Documents pre-annotated with viewpoint_id, in input order."""
    if known_viewpoints is not None and viewpoint_id not in known_viewpoints:
        raise UnknownViewpoint(viewpoint_id)
    return [d for d in documents if d.viewpoint == viewpoint_id]
