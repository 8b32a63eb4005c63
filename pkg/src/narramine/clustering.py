"""Density-based clustering of embedded event labels (HDBSCAN pipeline).

Pipeline: core distances at min_samples, mutual-reachability distances,
minimum spanning tree, a level-based single-linkage hierarchy, condensation
by min_cluster_size, stability-based flat selection, and epsilon merging.

Tie semantics are level-based: all edges of equal weight split a component
simultaneously, so results are deterministic and permutation-invariant up
to relabeling without any explicit tie-breaking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams


@dataclass
class ClusterResult:
    assignments: list[int]  # per-point cluster id, -1 = noise
    clusters: list[list[int]] = field(default_factory=list)


def pairwise_euclidean(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def core_distances(dist: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance to the min_samples-th nearest neighbor, the point itself included."""
    n = dist.shape[0]
    k = min(min_samples, n)
    return np.sort(dist, axis=1)[:, k - 1]


def mutual_reachability(dist: np.ndarray, core: np.ndarray) -> np.ndarray:
    mr = np.maximum(dist, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(mr, 0.0)
    return mr


def minimum_spanning_tree(weights: np.ndarray) -> list[tuple[float, int, int]]:
    """Prim's algorithm over a dense symmetric weight matrix.

    Returns n-1 edges (weight, u, v) with u < v. Equal-weight choices pick
    the lowest-index vertex, but any MST yields the same level hierarchy.
    """
    n = weights.shape[0]
    if n == 1:
        return []
    in_tree = np.zeros(n, dtype=bool)
    best = weights[0].copy()
    best_from = np.zeros(n, dtype=int)
    in_tree[0] = True
    best[0] = np.inf
    edges = []
    for _ in range(n - 1):
        v = int(np.argmin(best))
        u = int(best_from[v])
        edges.append((float(weights[u, v]), min(u, v), max(u, v)))
        in_tree[v] = True
        closer = weights[v] < best
        closer &= ~in_tree
        best_from[closer] = v
        best[closer] = weights[v][closer]
        best[v] = np.inf
    return edges


@dataclass
class _Cluster:
    id: int
    parent: int | None
    birth_lambda: float
    children: list[int] = field(default_factory=list)
    point_rows: list[tuple[int, float]] = field(default_factory=list)  # (point, fall-out lambda)
    size: int = 0


def _lambda_of(weight: float) -> float:
    return math.inf if weight <= 0.0 else 1.0 / weight


def _split_components(nodes: list[int], edges: list[tuple[float, int, int]],
                      w_max: float) -> list[tuple[list[int], list[tuple[float, int, int]]]]:
    """Connected components after removing every edge of weight == w_max."""
    parent = {v: v for v in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    kept = [e for e in edges if e[0] < w_max]
    for _, u, v in kept:
        parent[find(u)] = find(v)
    groups: dict[int, list[int]] = {}
    for v in nodes:
        groups.setdefault(find(v), []).append(v)
    comps = sorted(groups.values(), key=min)
    comp_of = {v: i for i, comp in enumerate(comps) for v in comp}
    comp_edges: list[list[tuple[float, int, int]]] = [[] for _ in comps]
    for e in kept:
        comp_edges[comp_of[e[1]]].append(e)
    return list(zip(comps, comp_edges))


def _condense(n_points: int, mst_edges: list[tuple[float, int, int]],
              min_cluster_size: int) -> dict[int, _Cluster]:
    """Build the condensed cluster tree from the MST, level by level."""
    tree: dict[int, _Cluster] = {}
    if n_points < min_cluster_size:
        return tree
    root = _Cluster(id=0, parent=None, birth_lambda=0.0, size=n_points)
    tree[0] = root
    next_id = 1
    # work items: (cluster id, member points, edges among them)
    stack = [(0, list(range(n_points)), list(mst_edges))]
    while stack:
        cid, nodes, edges = stack.pop()
        cluster = tree[cid]
        while True:
            if not edges:  # single point left in a continuing cluster
                cluster.point_rows.extend((p, math.inf) for p in nodes)
                break
            w_max = max(e[0] for e in edges)
            lam = _lambda_of(w_max)
            parts = _split_components(nodes, edges, w_max)
            big = [p for p in parts if len(p[0]) >= min_cluster_size]
            small = [p for p in parts if len(p[0]) < min_cluster_size]
            for comp, _ in small:
                cluster.point_rows.extend((p, lam) for p in comp)
            if len(big) >= 2:
                for comp, comp_edges in big:
                    child = _Cluster(id=next_id, parent=cid, birth_lambda=lam, size=len(comp))
                    tree[next_id] = child
                    cluster.children.append(next_id)
                    stack.append((next_id, comp, comp_edges))
                    next_id += 1
                break
            if len(big) == 1:
                nodes, edges = big[0]
                continue
            break  # no viable part: the cluster dies here
    return tree


def _stabilities(tree: dict[int, _Cluster]) -> dict[int, float]:
    out = {}
    for cid, cluster in tree.items():
        total = 0.0
        for _, lam in cluster.point_rows:
            total += lam - cluster.birth_lambda
        for child_id in cluster.children:
            child = tree[child_id]
            total += (child.birth_lambda - cluster.birth_lambda) * child.size
        out[cid] = total
    return out


def _select_eom(tree: dict[int, _Cluster], stability: dict[int, float]) -> set[int]:
    """Excess-of-mass selection; the root may win (single-cluster outcomes allowed)."""
    selected: set[int] = set()
    value: dict[int, float] = {}
    for cid in sorted(tree, reverse=True):  # children have larger ids than parents
        cluster = tree[cid]
        if not cluster.children:
            selected.add(cid)
            value[cid] = stability[cid]
            continue
        child_sum = sum(value[c] for c in cluster.children)
        if stability[cid] >= child_sum:
            value[cid] = stability[cid]
            selected -= _descendants(tree, cid)
            selected.add(cid)
        else:
            value[cid] = child_sum
    return selected


def _descendants(tree: dict[int, _Cluster], cid: int) -> set[int]:
    out, stack = set(), list(tree[cid].children)
    while stack:
        cur = stack.pop()
        out.add(cur)
        stack.extend(tree[cur].children)
    return out


def _epsilon_merge(tree: dict[int, _Cluster], selected: set[int], epsilon: float) -> set[int]:
    """Replace clusters born below the epsilon distance by their nearest
    ancestor born at or above it (cluster-selection-epsilon semantics)."""
    if epsilon <= 0.0:
        return set(selected)
    final: set[int] = set()
    for cid in selected:
        cur = cid
        while True:
            birth = tree[cur].birth_lambda
            eps_cur = math.inf if birth == 0.0 else 1.0 / birth
            if eps_cur >= epsilon or tree[cur].parent is None:
                break
            cur = tree[cur].parent
        final.add(cur)
    # drop any cluster nested under another chosen one
    return {c for c in final if not (_ancestors(tree, c) & final)}


def _ancestors(tree: dict[int, _Cluster], cid: int) -> set[int]:
    out = set()
    cur = tree[cid].parent
    while cur is not None:
        out.add(cur)
        cur = tree[cur].parent
    return out


def hdbscan(points, min_cluster_size: int, min_samples: int,
            epsilon: float = 0.0) -> ClusterResult:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise InvalidParams("need at least one point of fixed dimension")
    if not np.isfinite(pts).all():
        raise InvalidParams("points must be finite")
    if min_cluster_size < 2:
        raise InvalidParams("min_cluster_size must be >= 2")
    if min_samples < 1:
        raise InvalidParams("min_samples must be >= 1")
    if epsilon < 0:
        raise InvalidParams("epsilon must be >= 0")

    n = pts.shape[0]
    if n < min_cluster_size:
        return ClusterResult(assignments=[-1] * n, clusters=[])

    dist = pairwise_euclidean(pts)
    core = core_distances(dist, min_samples)
    mreach = mutual_reachability(dist, core)
    mst = minimum_spanning_tree(mreach)
    tree = _condense(n, mst, min_cluster_size)
    if not tree:
        return ClusterResult(assignments=[-1] * n, clusters=[])
    stability = _stabilities(tree)
    selected = _select_eom(tree, stability)
    final = _epsilon_merge(tree, selected, epsilon)

    fallout: dict[int, int] = {}  # point -> cluster where it fell out
    for cid, cluster in tree.items():
        for p, _ in cluster.point_rows:
            fallout[p] = cid

    raw_assign: list[int] = []
    for p in range(n):
        cur: int | None = fallout[p]
        label = -1
        while cur is not None:
            if cur in final:
                label = cur
                break
            cur = tree[cur].parent
        raw_assign.append(label)

    members: dict[int, list[int]] = {}
    for p, cid in enumerate(raw_assign):
        if cid != -1:
            members.setdefault(cid, []).append(p)
    ordered = sorted(members.values(), key=min)
    relabel = {min(m): i for i, m in enumerate(ordered)}
    assignments = [-1] * n
    for m in ordered:
        for p in m:
            assignments[p] = relabel[min(m)]
    return ClusterResult(assignments=assignments, clusters=ordered)
