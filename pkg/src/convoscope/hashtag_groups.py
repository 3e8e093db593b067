"""Hashtag co-occurrence groups, convo selection, and the topic-model path.

Hashtag route: frequency vocabulary -> co-occurrence counts -> cosine
distance -> (optional) neighborhood embedding -> density clustering.
Platforms without hashtags use the topic-model route instead
(:func:`fit_lda` / :func:`convos_from_topics`).
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from .corpus import Corpus
from .density import DensityClusterer
from .lda import GibbsLda
from .reduction import NeighborhoodEmbedding

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"\w+")


@dataclass
class HashtagVocab:
    """Top hashtags by message frequency, ties broken alphabetically."""

    entries: tuple[tuple[str, int], ...]

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(tag for tag, _ in self.entries)

    def index(self) -> dict[str, int]:
        return {tag: i for i, (tag, _) in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class CooccurrenceMatrix:
    """Symmetric message co-occurrence counts; the diagonal holds frequencies."""

    tags: tuple[str, ...]
    counts: csr_matrix

    @property
    def dim(self) -> int:
        return len(self.tags)


@dataclass
class HashtagGroup:
    group_id: int
    members: tuple[str, ...]
    exemplar: str
    scores: dict[str, int]


@dataclass
class TopicGroup:
    topic_id: int
    words: tuple[str, ...]
    weights: tuple[float, ...]


@dataclass
class Convo:
    """The message subset whose hashtags intersect one selected group."""

    terms: tuple[str, ...]
    group_id: int
    message_ids: tuple[str, ...]
    author_tweets: dict[str, int]
    author_retweets: dict[str, int]

    @property
    def total_authors(self) -> int:
        return len(self.author_tweets)

    @property
    def total_tweets(self) -> int:
        return len(self.message_ids)

    @property
    def total_retweets(self) -> int:
        return sum(self.author_retweets.values())


def build_vocab(corpus: Corpus, top_n: int) -> HashtagVocab:
    """The top_n most frequent hashtags (message frequency over originals)."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    freq: Counter[str] = Counter()
    for message in corpus.originals():
        freq.update(set(message.hashtags))
    if not freq:
        raise ValueError("no hashtag vocabulary: corpus has zero hashtags")
    ordered = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    return HashtagVocab(entries=tuple(ordered[:top_n]))


def cooccurrence(corpus: Corpus, vocab: HashtagVocab) -> CooccurrenceMatrix:
    """counts[i][j] = messages containing both tags; diagonal = tag frequency."""
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    index = vocab.index()
    rows: list[int] = []
    cols: list[int] = []
    for message in corpus.originals():
        present = sorted({index[t] for t in message.hashtags if t in index})
        for a in range(len(present)):
            rows.append(present[a])
            cols.append(present[a])
            for b in range(a + 1, len(present)):
                rows.extend((present[a], present[b]))
                cols.extend((present[b], present[a]))
    dim = len(vocab)
    data = np.ones(len(rows), dtype=np.int64)
    counts = coo_matrix((data, (rows, cols)), shape=(dim, dim)).tocsr()
    return CooccurrenceMatrix(tags=vocab.tags, counts=counts)


def distance_matrix(cooc: CooccurrenceMatrix) -> np.ndarray:
    """1 - cosine over co-occurrence rows (diagonal zeroed first), in [0, 1].

    All-zero rows sit at distance 1 from every other tag; the diagonal is 0.
    """
    A = cooc.counts.toarray().astype(np.float64)
    np.fill_diagonal(A, 0.0)
    norms = np.sqrt((A**2).sum(axis=1))
    sim = A @ A.T
    denom = np.outer(norms, norms)
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(denom > 0.0, sim / denom, 0.0)
    dist = np.clip(1.0 - sim, 0.0, 1.0)
    np.fill_diagonal(dist, 0.0)
    return dist


def extract_groups(
    corpus: Corpus,
    *,
    top_n: int = 6000,
    target_dim: int = 5,
    n_neighbors: int = 15,
    min_cluster_size: int = 10,
    min_samples: int | None = None,
    bypass_below: int = 200,
    n_epochs: int = 300,
    seed: int = 0,
) -> tuple[list[HashtagGroup], tuple[str, ...]]:
    """Cluster the hashtag vocabulary into groups; returns (groups, noise tags).

    For small vocabularies (dim < bypass_below) clustering runs directly on
    the distance matrix; larger ones go through the neighborhood embedding.
    """
    vocab = build_vocab(corpus, top_n)
    cooc = cooccurrence(corpus, vocab)
    dist = distance_matrix(cooc)
    clusterer = DensityClusterer(
        min_cluster_size=min_cluster_size, min_samples=min_samples, metric="precomputed"
    )
    if cooc.dim < bypass_below:
        labels = clusterer.fit_predict(dist)
    else:
        embedding = NeighborhoodEmbedding(
            n_components=target_dim,
            n_neighbors=n_neighbors,
            metric="precomputed",
            n_epochs=n_epochs,
            random_state=seed,
        ).fit_transform(dist)
        labels = DensityClusterer(
            min_cluster_size=min_cluster_size, min_samples=min_samples
        ).fit_predict(embedding)

    freq = dict(vocab.entries)
    by_label: dict[int, list[str]] = {}
    noise: list[str] = []
    for tag, label in zip(vocab.tags, labels):
        if label < 0:
            noise.append(tag)
        else:
            by_label.setdefault(int(label), []).append(tag)
    if not by_label:
        logger.warning("density clustering found no hashtag groups (all %d tags noise)", len(noise))

    raw_groups = []
    for members in by_label.values():
        members = sorted(members, key=lambda t: (-freq[t], t))
        raw_groups.append((members[0], members))
    raw_groups.sort(key=lambda g: (-freq[g[0]], g[0]))
    groups = [
        HashtagGroup(
            group_id=i,
            members=tuple(members),
            exemplar=exemplar,
            scores={t: freq[t] for t in members},
        )
        for i, (exemplar, members) in enumerate(raw_groups)
    ]
    return groups, tuple(noise)


def _edit_distance(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def nearest_hashtags(term: str, groups: list[HashtagGroup], limit: int = 5) -> list[str]:
    """Closest group members to a term by edit distance (diagnostic aid)."""
    term = term.lower().lstrip("#")
    candidates = sorted({tag for group in groups for tag in group.members})
    candidates.sort(key=lambda tag: (_edit_distance(term, tag), tag))
    return candidates[:limit]


def _normalize_terms(terms: list[str]) -> tuple[str, ...]:
    normed = tuple(dict.fromkeys(t.lower().lstrip("#") for t in terms if t.strip().lstrip("#")))
    if not normed:
        raise ValueError("terms must be non-empty")
    return normed


def _build_convo(
    corpus: Corpus, group_id: int, matched_terms: tuple[str, ...], members
) -> Convo:
    message_ids: list[str] = []
    author_tweets: dict[str, int] = {}
    author_retweets: dict[str, int] = {}
    for message in members:
        message_ids.append(message.id)
        author_tweets[message.author_id] = author_tweets.get(message.author_id, 0) + 1
        author_retweets[message.author_id] = (
            author_retweets.get(message.author_id, 0) + message.retweet_count
        )
    return Convo(
        terms=matched_terms,
        group_id=group_id,
        message_ids=tuple(message_ids),
        author_tweets=author_tweets,
        author_retweets=author_retweets,
    )


def find_convos(corpus: Corpus, groups: list[HashtagGroup], terms: list[str]) -> list[Convo]:
    """One convo per group containing a term of interest.

    Terms match case-insensitively with or without a leading '#'. Convo
    members are all corpus messages whose hashtag set intersects the group.
    """
    normed = _normalize_terms(terms)
    convos: list[Convo] = []
    for group in groups:
        member_set = set(group.members)
        matched = tuple(t for t in normed if t in member_set)
        if not matched:
            continue
        members = [m for m in corpus.messages.values() if member_set.intersection(m.hashtags)]
        convos.append(_build_convo(corpus, group.group_id, matched, members))
    if not convos:
        hints = nearest_hashtags(normed[0], groups)
        logger.warning(
            "no hashtag group contains any of %s; nearest known hashtags: %s",
            list(normed),
            hints,
        )
    return convos


def tokenize_for_topics(text: str) -> list[str]:
    return [t for t in _WORD_RE.findall(text.lower()) if not t.isdigit()]


def fit_lda(
    corpus: Corpus,
    n_topics: int,
    iterations: int = 200,
    alpha: float = 0.1,
    beta: float = 0.01,
    seed: int = 0,
) -> GibbsLda:
    """Fit the Gibbs-sampled topic model on clean-text tokens of originals."""
    from .corpus import message_sort_key

    ordered = sorted(corpus.originals(), key=message_sort_key)
    docs = [tokenize_for_topics(m.clean_text) for m in ordered]
    model = GibbsLda(
        n_topics=n_topics,
        n_iterations=iterations,
        alpha=alpha,
        beta=beta,
        random_state=seed,
    ).fit(docs)
    model.message_ids_ = tuple(ordered[i].id for i in model.doc_index_)
    return model


def topic_groups(model: GibbsLda, n_words: int = 20) -> list[TopicGroup]:
    """One group per topic, anchored by its top words."""
    out = []
    for k in range(model.n_topics):
        words = model.top_words(k, n_words)
        out.append(
            TopicGroup(
                topic_id=k,
                words=tuple(w for w, _ in words),
                weights=tuple(weight for _, weight in words),
            )
        )
    return out


def convos_from_topics(
    corpus: Corpus, model: GibbsLda, groups: list[TopicGroup], terms: list[str]
) -> list[Convo]:
    """Topic-route convo selection: membership by dominant document topic."""
    normed = _normalize_terms(terms)
    dominant = model.dominant_topics()
    by_topic: dict[int, list[str]] = {}
    for msg_id, topic in zip(model.message_ids_, dominant):
        by_topic.setdefault(int(topic), []).append(msg_id)
    convos: list[Convo] = []
    for group in groups:
        word_set = set(group.words)
        matched = tuple(t for t in normed if t in word_set)
        if not matched:
            continue
        members = [corpus.messages[i] for i in by_topic.get(group.topic_id, [])]
        convos.append(_build_convo(corpus, group.topic_id, matched, members))
    if not convos:
        logger.warning("no topic group contains any of %s", list(normed))
    return convos
