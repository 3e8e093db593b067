"""Two-level topic clustering of influencer messages with pluggable embeddings.

Embeddings come from a remote endpoint (chat-server wire style) or from the
deterministic lexical fallback. Clustering runs the reduce-then-density
procedure at two levels: over all vectors, then again inside any level-1
cluster that exceeds a size threshold. Density noise is attached to the
nearest cluster centroid by cosine similarity so every message lands in
exactly one final cluster.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np
import requests
from sklearn.base import BaseEstimator

from .corpus import Message
from .density import DensityClusterer
from .lexical import LexicalEmbedder
from .reduction import NeighborhoodEmbedding, pairwise_distances

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"\w+")


class EmbeddingError(Exception):
    pass


@dataclass
class MessageCluster:
    cluster_id: str
    parent_id: str | None
    message_ids: tuple[str, ...]
    top_terms: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.message_ids)


class LexicalProvider:
    """Deterministic hashed TF-IDF provider."""

    kind = "lexical"

    def __init__(self, dim: int = 384):
        self.dim = dim

    def embed(self, texts: list[str]) -> np.ndarray:
        return LexicalEmbedder(n_features=self.dim).fit_transform(texts)


class RemoteProvider:
    """Embedding endpoint client; falls back to lexical vectors on failure."""

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str = "",
        dim: int = 384,
        batch_size: int = 32,
        timeout: float = 30.0,
        allow_fallback: bool = True,
        api_key: str = "",
    ):
        self.endpoint = endpoint
        self.model = model
        self.dim = dim
        self.batch_size = batch_size
        self.timeout = timeout
        self.allow_fallback = allow_fallback
        self.api_key = api_key

    def _request(self, batch: list[str]) -> list[list[float]]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        response = requests.post(
            self.endpoint,
            json={"model": self.model, "input": batch},
            headers=headers,
            timeout=self.timeout,
        )
        response.raise_for_status()
        data = response.json()["data"]
        return [row["embedding"] for row in data]

    def embed(self, texts: list[str]) -> np.ndarray:
        try:
            vectors: list[list[float]] = []
            for start in range(0, len(texts), self.batch_size):
                vectors.extend(self._request(texts[start : start + self.batch_size]))
            out = np.asarray(vectors, dtype=np.float64)
            if out.shape != (len(texts), self.dim):
                raise EmbeddingError(
                    f"endpoint returned shape {out.shape}, expected {(len(texts), self.dim)}"
                )
            return out
        except (requests.RequestException, KeyError, ValueError, EmbeddingError) as exc:
            if not self.allow_fallback:
                raise EmbeddingError(f"remote embedding failed: {exc}") from exc
            logger.warning("remote embedding failed (%s); using lexical fallback", exc)
            return LexicalProvider(self.dim).embed(texts)


def embed(messages: list[Message], provider) -> np.ndarray:
    """One vector per message (clean text), shape (n, provider.dim)."""
    if not messages:
        raise ValueError("cannot embed an empty message list")
    vectors = provider.embed([m.clean_text for m in messages])
    if vectors.shape != (len(messages), provider.dim):
        raise EmbeddingError(f"provider returned wrong shape {vectors.shape}")
    return vectors


def _attach_noise(vectors: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Assign noise points to the nearest cluster centroid by cosine."""
    labels = labels.copy()
    cluster_ids = sorted(set(labels[labels >= 0]))
    if not cluster_ids:
        return labels
    norms = np.linalg.norm(vectors, axis=1)
    unit = vectors / np.where(norms > 0.0, norms, 1.0)[:, None]
    centroids = np.vstack([unit[labels == c].mean(axis=0) for c in cluster_ids])
    cnorm = np.linalg.norm(centroids, axis=1)
    centroids = centroids / np.where(cnorm > 0.0, cnorm, 1.0)[:, None]
    for i in np.flatnonzero(labels < 0):
        sims = centroids @ unit[i]
        labels[i] = cluster_ids[int(np.argmax(sims))]
    return labels


class TwoLevelClusterer(BaseEstimator):
    """Reduce + density-cluster, then re-cluster oversized level-1 clusters.

    ``fit_predict`` returns (level1, level2) index pairs per point; level2 is
    -1 for points whose level-1 cluster was not split.
    """

    def __init__(
        self,
        min_cluster_size: int = 5,
        min_samples: int | None = None,
        n_components: int = 5,
        n_neighbors: int = 15,
        level2_min_size: int = 100,
        n_epochs: int = 300,
        random_state: int = 0,
    ):
        self.min_cluster_size = min_cluster_size
        self.min_samples = min_samples
        self.n_components = n_components
        self.n_neighbors = n_neighbors
        self.level2_min_size = level2_min_size
        self.n_epochs = n_epochs
        self.random_state = random_state

    def _cluster_once(self, vectors: np.ndarray) -> np.ndarray:
        n = vectors.shape[0]
        dist = pairwise_distances(vectors, "cosine")
        reduced = NeighborhoodEmbedding(
            n_components=self.n_components,
            n_neighbors=min(self.n_neighbors, n - 1),
            metric="precomputed",
            n_epochs=self.n_epochs,
            random_state=self.random_state,
        ).fit_transform(dist)
        labels = DensityClusterer(
            min_cluster_size=self.min_cluster_size, min_samples=self.min_samples
        ).fit_predict(reduced)
        if labels.max() < 0:
            return np.zeros(n, dtype=np.int64)
        return _attach_noise(vectors, labels)

    def fit_predict(self, vectors: np.ndarray) -> list[tuple[int, int]]:
        vectors = np.asarray(vectors, dtype=np.float64)
        n = vectors.shape[0]
        if n < 2 * self.min_cluster_size:
            self.assignments_ = [(0, -1)] * n
            return self.assignments_
        level1 = self._cluster_once(vectors)
        assignments = [(int(l1), -1) for l1 in level1]
        for cluster in sorted(set(level1)):
            idx = np.flatnonzero(level1 == cluster)
            if idx.size <= self.level2_min_size or idx.size < 2 * self.min_cluster_size:
                continue
            sub = self._cluster_once(vectors[idx])
            if len(set(sub.tolist())) < 2:
                continue
            for local, point in enumerate(idx):
                assignments[point] = (int(cluster), int(sub[local]))
        self.assignments_ = assignments
        return assignments


def _class_tfidf_terms(texts_by_cluster: dict[str, list[str]], n_terms: int = 5) -> dict[str, tuple[str, ...]]:
    """Class-based TF-IDF: term counts per concatenated cluster document."""
    tf: dict[str, Counter] = {}
    totals: dict[str, int] = {}
    global_freq: Counter = Counter()
    for cid, texts in texts_by_cluster.items():
        counter: Counter = Counter()
        for text in texts:
            counter.update(_WORD_RE.findall(text.lower()))
        tf[cid] = counter
        totals[cid] = sum(counter.values())
        global_freq.update(counter)
    avg_tokens = (sum(totals.values()) / len(totals)) if totals else 0.0
    out: dict[str, tuple[str, ...]] = {}
    for cid, counter in tf.items():
        scored = [
            (count * np.log1p(avg_tokens / global_freq[term]), term)
            for term, count in counter.items()
        ]
        scored.sort(key=lambda st: (-st[0], st[1]))
        out[cid] = tuple(term for _, term in scored[:n_terms])
    return out


def cluster_messages(
    messages: list[Message],
    vectors: np.ndarray,
    *,
    min_cluster_size: int = 5,
    min_samples: int | None = None,
    n_components: int = 5,
    n_neighbors: int = 15,
    level2_min_size: int = 100,
    n_epochs: int = 300,
    random_state: int = 0,
) -> list[MessageCluster]:
    """Cluster messages and label each cluster with class-TF-IDF top terms.

    Returns level-1 clusters followed by any level-2 children; children carry
    ``parent_id``. Leaves (clusters without children) partition the input.
    """
    if len(messages) != vectors.shape[0]:
        raise ValueError("messages and vectors must align")
    assignments = TwoLevelClusterer(
        min_cluster_size=min_cluster_size,
        min_samples=min_samples,
        n_components=n_components,
        n_neighbors=n_neighbors,
        level2_min_size=level2_min_size,
        n_epochs=n_epochs,
        random_state=random_state,
    ).fit_predict(vectors)

    level1_members: dict[int, list[int]] = {}
    level2_members: dict[tuple[int, int], list[int]] = {}
    for point, (l1, l2) in enumerate(assignments):
        level1_members.setdefault(l1, []).append(point)
        if l2 >= 0:
            level2_members.setdefault((l1, l2), []).append(point)

    clusters: list[MessageCluster] = []
    texts_by_cluster: dict[str, list[str]] = {}

    def add(cluster_id: str, parent_id: str | None, points: list[int]) -> None:
        clusters.append(
            MessageCluster(
                cluster_id=cluster_id,
                parent_id=parent_id,
                message_ids=tuple(messages[p].id for p in points),
                top_terms=(),
            )
        )
        texts_by_cluster[cluster_id] = [messages[p].clean_text for p in points]

    for l1 in sorted(level1_members):
        add(f"c{l1}", None, level1_members[l1])
    for l1, l2 in sorted(level2_members):
        add(f"c{l1}.{l2}", f"c{l1}", level2_members[(l1, l2)])

    top_terms = _class_tfidf_terms(texts_by_cluster)
    return [
        MessageCluster(
            cluster_id=c.cluster_id,
            parent_id=c.parent_id,
            message_ids=c.message_ids,
            top_terms=top_terms[c.cluster_id],
        )
        for c in clusters
    ]


def leaf_clusters(clusters: list[MessageCluster]) -> list[MessageCluster]:
    parents = {c.parent_id for c in clusters if c.parent_id is not None}
    return [c for c in clusters if c.cluster_id not in parents]
