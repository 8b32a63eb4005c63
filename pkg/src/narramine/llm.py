"""Completion backends, prompt templates, response cache, and prompted tasks.

The live backend speaks a chat-completion HTTP contract at temperature 0.
The mock backend replays a JSON script keyed by (template name, prompt hash)
so that every pipeline stage is a pure function of its inputs.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
import os
import re
import threading
import time as _time
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Document
from .errors import BackendUnavailable, EmptyTimeline, UnknownPredicate, UnparseableAnswer
from .model import TimeSpec

log = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# prompt templates
# ---------------------------------------------------------------------------

# Spelling in the extraction skeleton is intentional; downstream scripts key
# on the exact prompt text.
TIMELINE_EXTRACTION = (
    "Here is a news article: '{text}' List the major events of the {event} "
    "in chronological order as reported in the article. Keep it consise and "
    "remove everything unrelated."
)

EVENT_DETECTION = (
    "Here is a news article: '{text}' Is this article clearly about the "
    "{event} ({timespan})?{parent_clause} Answer with yes or no."
)

PARENT_CLAUSE = " Consider the {event} specifically as part of the {parent_event}."

EVENT_LABELING = (
    "For each event description below, answer with one line in the format "
    "'{{event}} -- {{event label}} (time)', where the event label is a concise "
    "headline and (time) states when the event happened.\n"
    "{examples}\n"
    "Event descriptions:\n{sentences}"
)

TIMELINE_VERIFICATION = (
    "Here is a news article: '{text}' For each event label below, answer "
    "with one line: yes if the event is mentioned in the article, no "
    "otherwise.\n{examples}\nEvent labels:\n{labels}"
)

LABEL_SYNTHESIS = (
    "The following event labels all describe the same event:\n{labels}\n"
    "Provide a single concise event label for it."
)

RELATION_INFERENCE = (
    "Event A: {a_label} ({a_time}). Event B: {b_label} ({b_time}). "
    "Which narrative relationship holds from B to A? "
    "Answer with one of: {candidates}; or answer none."
)

TEMPLATES = {
    "event_detection": EVENT_DETECTION,
    "timeline_extraction": TIMELINE_EXTRACTION,
    "event_labeling": EVENT_LABELING,
    "timeline_verification": TIMELINE_VERIFICATION,
    "label_synthesis": LABEL_SYNTHESIS,
    "relation_inference": RELATION_INFERENCE,
}

# Editable few-shot example sets. Projects may override via
# load_few_shot_examples(path).
DEFAULT_FEW_SHOT = {
    "event_labeling": [
        ("American and allied forces crossed the border from Kuwait on the "
         "20th of March 2003 and pushed towards the capital.",
         "Invasion of Iraq (March 2003)"),
        ("Photographs of detainee mistreatment at a Baghdad prison surfaced "
         "in the spring of 2004.",
         "Abu Ghraib Prison Abuse Scandal (2004)"),
    ],
    "timeline_verification": [
        ("Invasion of Iraq (March 2003)", "yes"),
        ("Moon Landing (1969)", "no"),
    ],
}

_few_shot = {k: list(v) for k, v in DEFAULT_FEW_SHOT.items()}


def load_few_shot_examples(path: str | Path) -> None:
    """Replace few-shot example sets from a JSON file {task: [[in, out], ...]}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    for task, pairs in data.items():
        _few_shot[task] = [tuple(p) for p in pairs]


def _labeling_examples() -> str:
    lines = ["Examples:"]
    for sent, labeled in _few_shot["event_labeling"]:
        lines.append(f"{sent} -- {labeled}")
    return "\n".join(lines)


def _verification_examples() -> str:
    lines = ["Examples:"]
    for label, answer in _few_shot["timeline_verification"]:
        lines.append(f"{label} -> {answer}")
    return "\n".join(lines)


def render_timespan(ts: TimeSpec) -> str:
    b = ts.bounds()
    if b is None:
        return "time unknown"
    lo, hi = b
    if lo.year == hi.year and ts.granularity == "year":
        return str(lo.year)
    if ts.granularity == "year":
        return f"{lo.year} to {hi.year}"
    if lo == hi:
        return lo.isoformat()
    return f"{lo.isoformat()} to {hi.isoformat()}"


# ---------------------------------------------------------------------------
# backends and cache
# ---------------------------------------------------------------------------

def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


class MockBackend:
    """Replays a script: {template_name: {prompt_key | 'default': response}}."""

    def __init__(self, script: dict, model_name: str = "mock"):
        self.script = script
        self.model_name = model_name

    @staticmethod
    def from_file(path: str | Path) -> "MockBackend":
        return MockBackend(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, template_name: str, prompt: str) -> str:
        entries = self.script.get(template_name, {})
        key = prompt_key(prompt)
        if key in entries:
            return entries[key]
        if "default" in entries:
            return entries["default"]
        raise BackendUnavailable(
            f"mock script has no response for {template_name}/{key} "
            f"(prompt head: {prompt[:80]!r})")


class HttpBackend:
    """Chat-completion HTTP backend; single user message, temperature 0."""

    def __init__(self, endpoint: str, model_name: str, timeout: float = 60.0,
                 max_retries: int = 2, api_key_env: str = "NARRAMINE_API_KEY"):
        self.endpoint = endpoint
        self.model_name = model_name
        self.timeout = timeout
        self.max_retries = max_retries
        self.api_key_env = api_key_env

    def complete(self, template_name: str, prompt: str) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        last_exc = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = requests.post(self.endpoint, json=payload,
                                     headers=headers, timeout=self.timeout)
                resp.raise_for_status()
                data = resp.json()
                return data["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - collapsed into one error kind
                last_exc = exc
                if attempt < self.max_retries:
                    _time.sleep(min(2.0 ** attempt, 8.0))
        raise BackendUnavailable(f"backend failed after retries: {last_exc}")


class ResponseCache:
    """Content-addressed response store; safe for concurrent read/write."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory is not None else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._mem: dict[str, str] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(template_name: str, prompt: str, model_name: str) -> str:
        raw = "\x00".join((template_name, prompt, model_name))
        return hashlib.sha256(raw.encode("utf-8")).hexdigest()

    def get(self, key: str) -> str | None:
        with self._lock:
            if key in self._mem:
                return self._mem[key]
        if self.directory is not None:
            path = self.directory / key
            if path.exists():
                text = path.read_text(encoding="utf-8")
                with self._lock:
                    self._mem[key] = text
                return text
        return None

    def put(self, key: str, value: str) -> None:
        with self._lock:
            self._mem[key] = value
        if self.directory is not None:
            (self.directory / key).write_text(value, encoding="utf-8")

    def clear(self) -> int:
        with self._lock:
            n = len(self._mem)
            self._mem.clear()
        if self.directory is not None:
            files = list(self.directory.iterdir())
            n = max(n, len(files))
            for f in files:
                f.unlink()
        return n

    def stats(self) -> dict:
        disk = len(list(self.directory.iterdir())) if self.directory is not None else 0
        with self._lock:
            return {"memory_entries": len(self._mem), "disk_entries": disk}


class CachedBackend:
    """Wraps a backend; cache hits bypass it entirely."""

    def __init__(self, inner, cache: ResponseCache):
        self.inner = inner
        self.cache = cache

    @property
    def model_name(self):
        return self.inner.model_name

    def complete(self, template_name: str, prompt: str) -> str:
        key = ResponseCache.key(template_name, prompt, self.inner.model_name)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        out = self.inner.complete(template_name, prompt)
        self.cache.put(key, out)
        return out


# ---------------------------------------------------------------------------
# response parsing helpers
# ---------------------------------------------------------------------------

_BULLET = re.compile(r"^\s*(?:[-*•·]|\(?\d+[.)\]]|\d+\s*[-:])\s*")

_MONTHS = {m.lower(): i + 1 for i, m in enumerate(
    ["January", "February", "March", "April", "May", "June", "July",
     "August", "September", "October", "November", "December"])}

_RX_FULL_DATE = re.compile(
    r"\b([A-Za-z]+)\s+(\d{1,2})(?:st|nd|rd|th)?,?\s+(\d{4})\b")
_RX_MONTH_YEAR = re.compile(r"\b([A-Za-z]+)\s+(\d{4})\b")
_RX_YEAR_RANGE = re.compile(r"\b(\d{4})\s*[-–/]\s*(\d{4})\b")
_RX_YEAR = re.compile(r"\b(\d{4})\b")


def strip_list_marker(line: str) -> str:
    return _BULLET.sub("", line).strip()


def parse_time_hint(text: str) -> TimeSpec:
    """Best-effort parse of a time hint into a TimeSpec; unknown if hopeless."""
    text = text.strip()
    m = _RX_FULL_DATE.search(text)
    if m and m.group(1).lower() in _MONTHS:
        month = _MONTHS[m.group(1).lower()]
        try:
            return TimeSpec.instant(_dt.date(int(m.group(3)), month, int(m.group(2))))
        except ValueError:
            pass
    m = _RX_MONTH_YEAR.search(text)
    if m and m.group(1).lower() in _MONTHS:
        return TimeSpec.month(int(m.group(2)), _MONTHS[m.group(1).lower()])
    m = _RX_YEAR_RANGE.search(text)
    if m:
        y1, y2 = int(m.group(1)), int(m.group(2))
        if 1000 <= y1 <= y2 <= 2999:
            return TimeSpec.year_span(y1, y2)
    m = _RX_YEAR.search(text)
    if m:
        y = int(m.group(1))
        if 1000 <= y <= 2999:
            return TimeSpec.year(y)
    return TimeSpec.unknown()


_RX_SUFFIX_PAREN = re.compile(r"^(?P<label>.+?)\s*\((?P<hint>[^()]*\d{4}[^()]*)\)\s*$")
_RX_PREFIX_DATE = re.compile(r"^(?P<hint>[A-Za-z]+\s+\d{4}|\d{4})\s*:")


def parse_labeled_event(line: str) -> tuple[str, TimeSpec]:
    """Split 'label (time)' lines; date prefixes stay in the label."""
    line = strip_list_marker(line)
    if "--" in line:
        line = line.split("--", 1)[1].strip()
    m = _RX_SUFFIX_PAREN.match(line)
    if m:
        ts = parse_time_hint(m.group("hint"))
        if ts.kind != "unknown":
            return m.group("label").strip(), ts
    m = _RX_PREFIX_DATE.match(line)
    if m:
        ts = parse_time_hint(m.group("hint"))
        if ts.kind != "unknown":
            return line, ts
    return line, parse_time_hint(line)


def _parse_yes_no(text: str) -> bool:
    token = re.sub(r"[^a-z]", "", text.strip().lower().split()[0] if text.strip() else "")
    if token in ("yes", "y", "true"):
        return True
    if token in ("no", "n", "false"):
        return False
    raise UnparseableAnswer(f"cannot reduce to yes/no: {text!r}")


# ---------------------------------------------------------------------------
# prompted sub-tasks
# ---------------------------------------------------------------------------

def detect_event(backend, document: Document, event_name: str, timespan: TimeSpec,
                 parent_event: str | None = None) -> bool:
    """Ask whether the document is clearly about the event within the timespan."""
    if not document.body:
        raise ValueError("document body is empty")
    parent_clause = ""
    if parent_event:
        parent_clause = PARENT_CLAUSE.format(event=event_name, parent_event=parent_event)
    prompt = EVENT_DETECTION.format(
        text=document.body, event=event_name,
        timespan=render_timespan(timespan), parent_clause=parent_clause)
    return _parse_yes_no(backend.complete("event_detection", prompt))


def extract_timeline_raw(backend, document: Document, event_name: str) -> list[str]:
    """Ordered event sentences for the document, bullets normalized away."""
    prompt = TIMELINE_EXTRACTION.format(text=document.body, event=event_name)
    response = backend.complete("timeline_extraction", prompt)
    sentences = [strip_list_marker(line) for line in response.splitlines()]
    sentences = [s for s in sentences if s]
    if not sentences:
        raise EmptyTimeline(document.id)
    return sentences


def label_events(backend, event_sentences: list[str]) -> list[tuple[str, TimeSpec]]:
    """One (label, time) per sentence; time unknown when absent or unparseable."""
    if not event_sentences:
        raise ValueError("no event sentences to label")
    prompt = EVENT_LABELING.format(
        examples=_labeling_examples(),
        sentences="\n".join(f"{i + 1}. {s}" for i, s in enumerate(event_sentences)))
    response = backend.complete("event_labeling", prompt)
    lines = [l for l in response.splitlines() if l.strip()]
    out: list[tuple[str, TimeSpec]] = []
    for i, sentence in enumerate(event_sentences):
        if i < len(lines):
            out.append(parse_labeled_event(lines[i]))
        else:
            log.warning("labeling response shorter than input; keeping raw sentence %d", i)
            out.append((sentence, parse_time_hint(sentence)))
    return out


def verify_timeline(backend, labeled_events: list[tuple[str, TimeSpec]],
                    document: Document, timespan: TimeSpec) -> list[tuple[str, TimeSpec]]:
    """Keep events confirmed mentioned in the document and not provably
    outside the timespan.  Events with unknown time are retained: an unknown
    time cannot be shown to fall outside the span."""
    if not labeled_events:
        return []
    prompt = TIMELINE_VERIFICATION.format(
        text=document.body, examples=_verification_examples(),
        labels="\n".join(f"{i + 1}. {label}" for i, (label, _) in enumerate(labeled_events)))
    response = backend.complete("timeline_verification", prompt)
    lines = [l for l in response.splitlines() if l.strip()]
    kept = []
    for i, (label, ts) in enumerate(labeled_events):
        try:
            mentioned = _parse_yes_no(strip_list_marker(lines[i])) if i < len(lines) else True
        except UnparseableAnswer:
            log.warning("unparseable verification line %d, keeping event", i)
            mentioned = True
        if not mentioned:
            continue
        if ts.kind != "unknown" and not ts.overlaps(timespan):
            continue
        kept.append((label, ts))
    return kept


def synthesize_label(backend, member_labels: list[tuple[str, TimeSpec]]) -> tuple[str, TimeSpec]:
    """One representative label per cluster; time is the hull of member times."""
    if not member_labels:
        raise ValueError("cannot synthesize an empty cluster")
    hull = TimeSpec.hull([ts for _, ts in member_labels])
    if len(member_labels) == 1:
        return member_labels[0][0], hull
    labels = sorted({label for label, _ in member_labels})
    prompt = LABEL_SYNTHESIS.format(labels="\n".join(f"- {l}" for l in labels))
    response = backend.complete("label_synthesis", prompt).strip().splitlines()[0].strip()
    return response, hull


def infer_relation(backend, event_a: tuple[str, TimeSpec], event_b: tuple[str, TimeSpec],
                   candidates: tuple[str, ...] = ("happened after",)) -> str | None:
    """Predicate label relating event_b to event_a, or None.

    Raises UnknownPredicate when the model emits a label outside `candidates`;
    callers are expected to map that to None plus a warning.
    """
    (a_label, a_time), (b_label, b_time) = event_a, event_b
    if a_label.strip().casefold() == b_label.strip().casefold():
        return None
    prompt = RELATION_INFERENCE.format(
        a_label=a_label, a_time=render_timespan(a_time),
        b_label=b_label, b_time=render_timespan(b_time),
        candidates="; ".join(candidates))
    answer = backend.complete("relation_inference", prompt).strip().lower().rstrip(".")
    if answer == "none":
        return None
    for cand in candidates:
        if answer == cand.lower():
            return cand
    raise UnknownPredicate(answer)
