"""narramine: mine, bind, and compare viewpoint-specific event narratives."""

from .model import (
    CATEGORIES,
    EntityRef,
    EventNode,
    Literal,
    Narrative,
    NarrativeStore,
    TimeSpec,
    Viewpoint,
    category_implications,
    deserialize_store,
    serialize_narrative,
    serialize_store,
)

__version__ = "0.1.0"

__all__ = [
    "CATEGORIES",
    "EntityRef",
    "EventNode",
    "Literal",
    "Narrative",
    "NarrativeStore",
    "TimeSpec",
    "Viewpoint",
    "category_implications",
    "deserialize_store",
    "serialize_narrative",
    "serialize_store",
    "__version__",
]
