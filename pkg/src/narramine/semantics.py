"""Embedding backends, distance metrics, and cosine-threshold cluster merging."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import BackendUnavailable, DimensionMismatch, InvalidThreshold, ZeroVector


class FixtureEmbeddingBackend:
    """Embeddings from a JSON table {text: vector}. Unknown texts are errors."""

    def __init__(self, table: dict[str, list[float]]):
        if not table:
            raise ValueError("empty embedding table")
        self.table = {k: np.asarray(v, dtype=float) for k, v in table.items()}
        dims = {v.shape[0] for v in self.table.values()}
        if len(dims) != 1:
            raise DimensionMismatch(f"fixture table mixes dimensions: {sorted(dims)}")
        self.dimension = dims.pop()

    @staticmethod
    def from_file(path: str | Path) -> "FixtureEmbeddingBackend":
        return FixtureEmbeddingBackend(json.loads(Path(path).read_text(encoding="utf-8")))

    def embed(self, texts: list[str]) -> np.ndarray:
        rows = []
        for t in texts:
            if t not in self.table:
                raise BackendUnavailable(f"no fixture embedding for {t!r}")
            rows.append(self.table[t])
        return np.stack(rows)


class HttpEmbeddingBackend:
    """POST {"texts": [...]} -> {"vectors": [[...], ...]}."""

    def __init__(self, endpoint: str, dimension: int, timeout: float = 60.0):
        self.endpoint = endpoint
        self.dimension = dimension
        self.timeout = timeout

    def embed(self, texts: list[str]) -> np.ndarray:
        import requests

        try:
            resp = requests.post(self.endpoint, json={"texts": texts}, timeout=self.timeout)
            resp.raise_for_status()
            vectors = np.asarray(resp.json()["vectors"], dtype=float)
        except Exception as exc:  # noqa: BLE001
            raise BackendUnavailable(f"embedding backend failed: {exc}") from exc
        if vectors.shape != (len(texts), self.dimension):
            raise DimensionMismatch(
                f"expected {(len(texts), self.dimension)}, got {vectors.shape}")
        return vectors


def embed(backend, texts: list[str]) -> np.ndarray:
    """Order-preserving embedding of non-empty texts."""
    if not texts:
        raise ValueError("no texts to embed")
    if any(not t for t in texts):
        raise ValueError("texts must be non-empty strings")
    vectors = backend.embed(list(texts))
    if vectors.shape != (len(texts), backend.dimension):
        raise DimensionMismatch(
            f"backend returned {vectors.shape}, expected {(len(texts), backend.dimension)}")
    if not np.isfinite(vectors).all():
        raise ValueError("embedding vectors must be finite")
    return vectors


def euclidean(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero vectors")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def merge_clusters(clusters: list[list[int]], vectors: np.ndarray,
                   threshold: float) -> tuple[list[list[int]], list[tuple[int, int, float]]]:
    """Iteratively merge cluster pairs whose centroid cosine similarity is at
    least `threshold`, highest similarity first, until fixpoint.

    Cluster ids in the merge log refer to positions in the evolving list;
    a merge folds the higher-id cluster into the lower-id one. Ties resolve
    to the lowest (id, id) pair, so the procedure is deterministic.
    """
    if not -1.0 <= threshold <= 1.0:
        raise InvalidThreshold(threshold)
    vectors = np.asarray(vectors, dtype=float)
    current = [sorted(c) for c in clusters]
    log: list[tuple[int, int, float]] = []
    while len(current) > 1:
        centroids = [vectors[c].mean(axis=0) for c in current]
        best = None
        for i in range(len(current)):
            for j in range(i + 1, len(current)):
                try:
                    sim = cosine(centroids[i], centroids[j])
                except ZeroVector:
                    continue
                if sim >= threshold and (best is None or sim > best[0] + 1e-12):
                    best = (sim, i, j)
        if best is None:
            break
        sim, i, j = best
        current[i] = sorted(current[i] + current[j])
        del current[j]
        log.append((i, j, sim))
    return current, log
