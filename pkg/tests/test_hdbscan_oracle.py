"""Clustering equivalence against an independently written reference.

The reference never builds a minimum spanning tree: it derives the cluster
hierarchy from connected components of the full mutual-reachability graph
under descending distance thresholds. For small instances (n <= 8) every
minimum spanning tree is enumerated to confirm the hierarchy the library
derives from *its* MST is MST-independent.
"""

from __future__ import annotations

import itertools
import math
import random

import numpy as np
import pytest

from narramine.clustering import (
    core_distances,
    hdbscan,
    minimum_spanning_tree,
    mutual_reachability,
    pairwise_euclidean,
)
from narramine.errors import InvalidParams


# ---------------------------------------------------------------------------
# reference implementation (threshold scan over the full graph)
# ---------------------------------------------------------------------------

def ref_mutual_reachability(points, min_samples):
    n = len(points)
    dist = [[math.dist(points[i], points[j]) for j in range(n)] for i in range(n)]
    k = min(min_samples, n)
    core = [sorted(dist[i])[k - 1] for i in range(n)]
    mr = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j:
                mr[i][j] = max(dist[i][j], core[i], core[j])
    return mr


def _components(nodes, mr, limit):
    """Connected components using only edges strictly below `limit`."""
    remaining = set(nodes)
    comps = []
    while remaining:
        seed = min(remaining)
        comp, frontier = {seed}, [seed]
        while frontier:
            u = frontier.pop()
            for v in list(remaining - comp):
                if mr[u][v] < limit:
                    comp.add(v)
                    frontier.append(v)
        comps.append(sorted(comp))
        remaining -= comp
    return sorted(comps, key=min)


def _connect_threshold(nodes, mr):
    """Smallest weight w such that `nodes` is connected via edges <= w."""
    weights = sorted({mr[i][j] for i in nodes for j in nodes if i < j})
    for w in weights:
        if len(_components(nodes, mr, math.nextafter(w, math.inf))) == 1:
            return w
    return 0.0


def ref_condense(points, min_cluster_size, min_samples):
    """Condensed tree as {cid: dict(parent, birth, rows, children, size)}."""
    n = len(points)
    mr = ref_mutual_reachability(points, min_samples)
    tree = {}
    if n < min_cluster_size:
        return tree, mr
    counter = itertools.count()

    def build(nodes, parent, birth_lambda):
        cid = next(counter)
        info = {"parent": parent, "birth": birth_lambda, "rows": [],
                "children": [], "size": len(nodes)}
        tree[cid] = info
        current = list(nodes)
        while True:
            if len(current) == 1:
                info["rows"].append((current[0], math.inf))
                return cid
            m = _connect_threshold(current, mr)
            if m <= 0.0:
                info["rows"].extend((p, math.inf) for p in current)
                return cid
            lam = 1.0 / m
            parts = _components(current, mr, m)
            big = [p for p in parts if len(p) >= min_cluster_size]
            for part in parts:
                if len(part) < min_cluster_size:
                    info["rows"].extend((p, lam) for p in part)
            if len(big) >= 2:
                for part in big:
                    info["children"].append(build(part, cid, lam))
                return cid
            if len(big) == 1:
                current = big[0]
                continue
            return cid

    build(list(range(n)), None, 0.0)
    return tree, mr


def ref_select(tree, epsilon):
    """Stability-based flat selection with epsilon merging."""
    stability = {}
    for cid in sorted(tree, reverse=True):
        info = tree[cid]
        s = sum(lam - info["birth"] for _, lam in info["rows"])
        s += sum((tree[c]["birth"] - info["birth"]) * tree[c]["size"]
                 for c in info["children"])
        stability[cid] = s

    winner = {}  # cid -> set of selected clusters in its subtree
    for cid in sorted(tree, reverse=True):
        info = tree[cid]
        if not info["children"]:
            winner[cid] = {cid}
            continue
        child_sets = [winner[c] for c in info["children"]]
        child_value = sum(stability_of(tree, stability, s) for s in child_sets)
        if stability[cid] >= child_value:
            winner[cid] = {cid}
        else:
            winner[cid] = set().union(*child_sets)
    selected = winner[min(tree)] if tree else set()

    if epsilon > 0.0:
        merged = set()
        for cid in selected:
            cur = cid
            while True:
                birth = tree[cur]["birth"]
                eps_cur = math.inf if birth == 0.0 else 1.0 / birth
                if eps_cur >= epsilon or tree[cur]["parent"] is None:
                    break
                cur = tree[cur]["parent"]
            merged.add(cur)
        selected = {c for c in merged
                    if not any(a in merged for a in _ancestors(tree, c))}
    return selected


def stability_of(tree, stability, selected_set):
    return sum(stability[c] for c in selected_set)


def _ancestors(tree, cid):
    out = []
    cur = tree[cid]["parent"]
    while cur is not None:
        out.append(cur)
        cur = tree[cur]["parent"]
    return out


def ref_hdbscan(points, min_cluster_size, min_samples, epsilon=0.0):
    n = len(points)
    tree, _ = ref_condense(points, min_cluster_size, min_samples)
    if not tree:
        return [-1] * n
    selected = ref_select(tree, epsilon)
    fallout = {}
    for cid, info in tree.items():
        for p, _ in info["rows"]:
            fallout[p] = cid
    raw = []
    for p in range(n):
        cur = fallout[p]
        label = -1
        while cur is not None:
            if cur in selected:
                label = cur
                break
            cur = tree[cur]["parent"]
        raw.append(label)
    return _canonical(raw)


def _canonical(raw):
    """Relabel clusters by their smallest member index; noise stays -1."""
    order = {}
    for p, c in enumerate(raw):
        if c != -1 and c not in order:
            order[c] = len(order)
    return [-1 if c == -1 else order[c] for c in raw]


# ---------------------------------------------------------------------------
# exhaustive MST enumeration (n <= 8)
# ---------------------------------------------------------------------------

def all_msts(mr, n):
    """Every minimum spanning tree of the complete graph, as edge lists."""
    edges = [(mr[i][j], i, j) for i in range(n) for j in range(i + 1, n)]
    # an edge can appear in some MST iff its weight equals the minimax
    # connection weight of its endpoints
    candidates = [e for e in edges
                  if abs(e[0] - _connect_threshold([e[1], e[2]], mr)) < 1e-12]
    target = sum(e[0] for e in minimum_spanning_tree(np.array(mr)))
    msts = []
    for combo in itertools.combinations(candidates, n - 1):
        if abs(sum(e[0] for e in combo) - target) > 1e-9:
            continue
        if _spans(combo, n):
            msts.append(combo)
    return msts


def _spans(edge_set, n):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    joined = 0
    for _, u, v in edge_set:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
        joined += 1
    return joined == n - 1


def mst_level_components(mst_edges, n):
    """{weight: components after removing all edges >= weight}, per level."""
    levels = {}
    for w in sorted({e[0] for e in mst_edges}, reverse=True):
        kept = [e for e in mst_edges if e[0] < w]
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for _, u, v in kept:
            parent[find(u)] = find(v)
        groups = {}
        for p in range(n):
            groups.setdefault(find(p), []).append(p)
        levels[w] = sorted((sorted(g) for g in groups.values()), key=min)
    return levels


# ---------------------------------------------------------------------------
# instance generators
# ---------------------------------------------------------------------------

def random_instances(count=24, seed=1813):
    rng = random.Random(seed)
    instances = []
    for i in range(count):
        n = rng.randint(5, 40)
        dim = rng.randint(1, 4)
        style = i % 3
        pts = []
        if style == 0:  # uniform noise
            pts = [[rng.uniform(-5, 5) for _ in range(dim)] for _ in range(n)]
        elif style == 1:  # gaussian blobs
            blobs = rng.randint(2, 4)
            centers = [[rng.uniform(-8, 8) for _ in range(dim)] for _ in range(blobs)]
            for _ in range(n):
                c = rng.choice(centers)
                pts.append([x + rng.gauss(0, 0.3) for x in c])
        else:  # grid with duplicates: many tied distances
            for _ in range(n):
                pts.append([float(rng.randint(0, 3)) for _ in range(dim)])
        params = dict(min_cluster_size=rng.randint(2, 5),
                      min_samples=rng.randint(1, 4),
                      epsilon=rng.choice([0.0, 0.1, 0.5, 1.0]))
        instances.append((pts, params))
    return instances


# ---------------------------------------------------------------------------
# tests
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("idx", range(24))
def test_matches_reference_on_randomized_instances(idx):
    pts, params = random_instances()[idx]
    got = hdbscan(np.array(pts), **params).assignments
    want = ref_hdbscan(pts, **params)
    assert got == want


def test_exhaustive_mst_level_equivalence_small_n():
    rng = random.Random(97)
    checked_multi = 0
    for _ in range(12):
        n = rng.randint(4, 8)
        dim = rng.randint(1, 2)
        # coarse coordinates force weight ties and multiple MSTs
        pts = [[float(rng.randint(0, 2)) for _ in range(dim)] for _ in range(n)]
        ms = rng.randint(1, 3)
        mr = ref_mutual_reachability(pts, ms)
        msts = all_msts(mr, n)
        assert msts, "no MST found"
        if len(msts) > 1:
            checked_multi += 1
        reference = mst_level_components(msts[0], n)
        for mst in msts[1:]:
            assert mst_level_components(mst, n) == reference
        # the level components equal full-graph threshold components
        for w, comps in reference.items():
            assert comps == _components(list(range(n)), mr, w)
    assert checked_multi >= 3  # tie-heavy instances actually had several MSTs


def test_all_identical_points_form_one_cluster():
    pts = np.zeros((6, 3))
    result = hdbscan(pts, min_cluster_size=2, min_samples=2)
    assert result.assignments == [0] * 6
    assert result.clusters == [[0, 1, 2, 3, 4, 5]]


def test_fewer_points_than_min_cluster_size_is_all_noise():
    result = hdbscan(np.array([[0.0], [1.0]]), min_cluster_size=3, min_samples=1)
    assert result.assignments == [-1, -1]
    assert result.clusters == []


def test_two_well_separated_blobs():
    pts = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1],
                    [9.0, 9.0], [9.1, 9.0], [9.0, 9.1]])
    result = hdbscan(pts, min_cluster_size=2, min_samples=2)
    assert result.clusters == [[0, 1, 2], [3, 4, 5]]


def test_permutation_invariance_up_to_relabeling():
    pts, params = random_instances()[3]
    rng = random.Random(5)
    base = hdbscan(np.array(pts), **params).assignments
    for _ in range(3):
        perm = list(range(len(pts)))
        rng.shuffle(perm)
        shuffled = [pts[p] for p in perm]
        out = hdbscan(np.array(shuffled), **params).assignments
        # undo the permutation, then compare partitions as sets of sets
        undone = [None] * len(pts)
        for new_idx, old_idx in enumerate(perm):
            undone[old_idx] = out[new_idx]
        def parts(assign):
            groups = {}
            for p, c in enumerate(assign):
                groups.setdefault(c, set()).add(p)
            noise = groups.pop(-1, set())
            return frozenset(frozenset(g) for g in groups.values()), noise
        assert parts(undone) == parts(base)


def test_parameter_validation():
    pts = np.zeros((4, 2))
    with pytest.raises(InvalidParams):
        hdbscan(pts, min_cluster_size=1, min_samples=1)
    with pytest.raises(InvalidParams):
        hdbscan(pts, min_cluster_size=2, min_samples=0)
    with pytest.raises(InvalidParams):
        hdbscan(pts, min_cluster_size=2, min_samples=1, epsilon=-0.5)
    with pytest.raises(InvalidParams):
        hdbscan(np.array([[np.inf, 0.0]]), min_cluster_size=2, min_samples=1)


def test_pipeline_pieces_agree_with_reference():
    pts, params = random_instances()[7]
    arr = np.array(pts)
    dist = pairwise_euclidean(arr)
    core = core_distances(dist, params["min_samples"])
    mr = mutual_reachability(dist, core)
    ref = ref_mutual_reachability(pts, params["min_samples"])
    assert np.allclose(mr, np.array(ref))
