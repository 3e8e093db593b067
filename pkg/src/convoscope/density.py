"""Density-based clustering via mutual reachability and cluster stability.

The procedure: core distances from the min_samples-th neighbor, mutual
reachability distances, a minimum spanning tree, the single-linkage merge
tree, a condensed tree keeping only components of at least min_cluster_size,
and excess-of-mass selection of the most stable clusters. Points outside
every selected cluster are labeled noise (-1).

Everything is deterministic: ties are broken by point index.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .reduction import pairwise_distances

_EPS = 1e-12


def _mst_edges(W: np.ndarray) -> list[tuple[int, int, float]]:
    """Prim's algorithm over a dense symmetric weight matrix."""
    n = W.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = W[0].copy()
    best_from = np.zeros(n, dtype=np.int64)
    edges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        masked = np.where(in_tree, np.inf, best)
        j = int(np.argmin(masked))
        edges.append((int(best_from[j]), j, float(best[j])))
        in_tree[j] = True
        closer = W[j] < best
        best = np.where(closer, W[j], best)
        best_from = np.where(closer, j, best_from)
    return edges


def _single_linkage(edges: list[tuple[int, int, float]], n: int) -> list[tuple[int, int, float, int]]:
    """Merge tree from sorted MST edges; node ids n..2n-2, leaves 0..n-1."""
    order = sorted(edges, key=lambda e: (e[2], e[0], e[1]))
    parent = list(range(2 * n - 1))
    size = [1] * n + [0] * (n - 1)
    merges: list[tuple[int, int, float, int]] = []
    next_node = n

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, w in order:
        ru, rv = find(u), find(v)
        merged = size[ru] + size[rv]
        merges.append((ru, rv, w, merged))
        parent[ru] = parent[rv] = next_node
        size[next_node] = merged
        next_node += 1
    return merges


def _leaves_under(node: int, merges, n: int) -> list[int]:
    out: list[int] = []
    stack = [node]
    while stack:
        cur = stack.pop()
        if cur < n:
            out.append(cur)
        else:
            left, right, _, _ = merges[cur - n]
            stack.extend((left, right))
    return out


def _condense(merges, n: int, min_cluster_size: int):
    """Condensed tree rows (parent, child, lambda, size); clusters get ids >= n."""
    if not merges:
        return [], n
    root = n + len(merges) - 1
    rows: list[tuple[int, int, float, int]] = []
    next_label = n + 1
    # stack of (dendrogram node, condensed cluster label)
    stack: list[tuple[int, int]] = [(root, n)]
    while stack:
        node, label = stack.pop()
        left, right, dist, _ = merges[node - n]
        lam = 1.0 / max(dist, _EPS)
        l_size = 1 if left < n else merges[left - n][3]
        r_size = 1 if right < n else merges[right - n][3]
        if l_size >= min_cluster_size and r_size >= min_cluster_size:
            for child, child_size in ((left, l_size), (right, r_size)):
                child_label = next_label
                next_label += 1
                rows.append((label, child_label, lam, child_size))
                stack.append((child, child_label))
        elif l_size < min_cluster_size and r_size < min_cluster_size:
            for child in (left, right):
                for leaf in _leaves_under(child, merges, n):
                    rows.append((label, leaf, lam, 1))
        else:
            big, small = (left, right) if l_size >= r_size else (right, left)
            for leaf in _leaves_under(small, merges, n):
                rows.append((label, leaf, lam, 1))
            stack.append((big, label))
    return rows, n


def _stability(rows, root: int) -> dict[int, float]:
    births: dict[int, float] = {root: 0.0}
    for _, child, lam, size in rows:
        if size > 1:
            births[child] = lam
    stab: dict[int, float] = {c: 0.0 for c in births}
    for parent, _, lam, size in rows:
        stab[parent] += (lam - births[parent]) * size
    return stab


def _select_eom(rows, root: int, stability: dict[int, float]) -> set[int]:
    children: dict[int, list[int]] = {c: [] for c in stability}
    parent_of: dict[int, int] = {}
    for parent, child, _, size in rows:
        if child in stability:
            children[parent].append(child)
            parent_of[child] = parent
    selected: dict[int, bool] = {}
    score: dict[int, float] = {}
    for c in sorted(stability, reverse=True):
        child_score = sum(score[d] for d in children[c])
        if c == root:
            selected[c] = False
            score[c] = child_score
        elif not children[c] or stability[c] >= child_score:
            selected[c] = True
            score[c] = stability[c]
            stack = list(children[c])
            while stack:
                d = stack.pop()
                selected[d] = False
                stack.extend(children[d])
        else:
            selected[c] = False
            score[c] = child_score
    return {c for c, flag in selected.items() if flag}


class DensityClusterer(BaseEstimator, ClusterMixin):
    """Stability-based density clustering with a noise label.

    Parameters
    ----------
    min_cluster_size : smallest group size considered a cluster (>= 2).
    min_samples : neighbor count for core distances; defaults to
        min_cluster_size. Smaller values make density estimates more local.
    metric : "euclidean", "cosine", or "precomputed".

    Attributes
    ----------
    labels_ : cluster index per point, -1 for noise. Labels are numbered by
        the smallest member index, so output is deterministic.
    """

    def __init__(self, min_cluster_size: int = 5, min_samples: int | None = None, metric: str = "euclidean"):
        self.min_cluster_size = min_cluster_size
        self.min_samples = min_samples
        self.metric = metric

    def fit(self, X, y=None):
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        D = pairwise_distances(X, self.metric)
        n = D.shape[0]
        if n < 2:
            self.labels_ = np.full(n, -1, dtype=np.int64)
            self.n_clusters_ = 0
            return self

        k = self.min_samples if self.min_samples is not None else self.min_cluster_size
        k = max(1, min(k, n - 1))
        # Row j of sort includes the self-distance 0 at column 0.
        core = np.sort(D, axis=1, kind="stable")[:, k]
        reach = np.maximum(D, np.maximum(core[:, None], core[None, :]))
        reach = np.maximum(reach, _EPS)
        np.fill_diagonal(reach, 0.0)

        merges = _single_linkage(_mst_edges(reach), n)
        rows, root = _condense(merges, n, self.min_cluster_size)
        labels = np.full(n, -1, dtype=np.int64)
        if rows:
            stability = _stability(rows, root)
            chosen = _select_eom(rows, root, stability)
            if chosen:
                parent_of = {child: parent for parent, child, _, size in rows if child in stability}
                nearest: dict[int, int | None] = {root: None}
                for c in sorted(stability):
                    if c == root:
                        continue
                    nearest[c] = c if c in chosen else nearest[parent_of[c]]
                members: dict[int, list[int]] = {}
                for parent, child, _, size in rows:
                    if size == 1 and child < n:
                        owner = nearest.get(parent)
                        if owner is not None:
                            members.setdefault(owner, []).append(child)
                for label, owner in enumerate(sorted(members, key=lambda c: min(members[c]))):
                    labels[members[owner]] = label
        self.labels_ = labels
        self.n_clusters_ = int(labels.max() + 1) if labels.size else 0
        return self
