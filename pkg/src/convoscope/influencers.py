"""Influencer ranking, share statistics, retweet network, coordination score."""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus
from .hashtag_groups import Convo

DEFAULT_WEIGHTS = (0.4, 0.4, 0.2)
DEFAULT_OPERATION_THRESHOLD = 0.5


@dataclass
class InfluencerProfile:
    author_id: str
    rank: int
    tweets_in_convo: int
    received_retweets: int


@dataclass
class InfluencerStats:
    """Influencer share of a convo's tweets and received retweets."""

    influencer_tweets: int
    convo_tweets: int
    influencer_retweets: int
    convo_retweets: int

    def __post_init__(self) -> None:
        if self.influencer_tweets > self.convo_tweets:
            raise ValueError("influencer tweet count exceeds convo total")
        if self.influencer_retweets > self.convo_retweets:
            raise ValueError("influencer retweet count exceeds convo total")

    @property
    def tweet_share(self) -> float:
        return self.influencer_tweets / self.convo_tweets if self.convo_tweets else 0.0

    @property
    def retweet_share(self) -> float:
        return self.influencer_retweets / self.convo_retweets if self.convo_retweets else 0.0


@dataclass
class InfluencerNetwork:
    """Directed retweet graph over the top influencers (whole-corpus edges).

    Edge direction is retweeter -> original author. Self-retweets are kept
    out of the edge set and tracked per node in ``self_loops``.
    """

    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], int] = field(default_factory=dict)
    self_loops: dict[str, int] = field(default_factory=dict)

    def display_index(self) -> dict[str, str]:
        return {author: f"I{i + 1}" for i, author in enumerate(self.nodes)}


@dataclass
class CoordinationMetrics:
    edge_density: float
    bidirectional_pair_count: int
    reciprocity: float
    self_loop_count: int
    influencer_tweet_share: float
    operation_score: float
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "edge_density": self.edge_density,
            "bidirectional_pair_count": self.bidirectional_pair_count,
            "reciprocity": self.reciprocity,
            "self_loop_count": self.self_loop_count,
            "influencer_tweet_share": self.influencer_tweet_share,
            "operation_score": self.operation_score,
            "degenerate": self.degenerate,
        }


def _ranked_authors(convo: Convo) -> list[tuple[str, int, int]]:
    rows = [
        (author, convo.author_tweets[author], convo.author_retweets.get(author, 0))
        for author in convo.author_tweets
    ]
    rows.sort(key=lambda r: (-r[2], r[0]))
    return rows


def top_influencers(
    convo: Convo,
    k: int = 10,
    *,
    proportional_threshold: float | None = None,
) -> list[InfluencerProfile]:
    """Rank convo authors by received retweets (ties by author id).

    Fixed mode returns the top min(k, author count). Proportional mode keeps
    every author whose share of convo tweets is at least the threshold.
    """
    if convo.total_tweets == 0:
        raise ValueError("cannot rank influencers of an empty convo")
    ranked = _ranked_authors(convo)
    if proportional_threshold is not None:
        if not 0.0 < proportional_threshold <= 1.0:
            raise ValueError("proportional threshold must be in (0, 1]")
        total = convo.total_tweets
        chosen = [r for r in ranked if r[1] / total >= proportional_threshold]
    else:
        if k < 1:
            raise ValueError("k must be >= 1")
        chosen = ranked[:k]
    return [
        InfluencerProfile(author_id=a, rank=i + 1, tweets_in_convo=t, received_retweets=r)
        for i, (a, t, r) in enumerate(chosen)
    ]


def influencer_stats(convo: Convo, profiles: list[InfluencerProfile]) -> InfluencerStats:
    authors = {p.author_id for p in profiles}
    if not authors.issubset(convo.author_tweets):
        raise ValueError("profiles must be a subset of convo authors")
    return InfluencerStats(
        influencer_tweets=sum(convo.author_tweets[a] for a in authors),
        convo_tweets=convo.total_tweets,
        influencer_retweets=sum(convo.author_retweets.get(a, 0) for a in authors),
        convo_retweets=convo.total_retweets,
    )


def build_network(corpus: Corpus, profiles: list[InfluencerProfile]) -> InfluencerNetwork:
    """Retweet edges among influencers over the whole (resolved) corpus."""
    influencers = {p.author_id for p in profiles}
    nodes = tuple(p.author_id for p in sorted(profiles, key=lambda p: p.rank))
    edges: dict[tuple[str, str], int] = {}
    self_loops: dict[str, int] = {}
    for message in corpus.messages.values():
        if message.resolved_to is None:
            continue
        retweeter = message.author_id
        original = corpus.messages[message.resolved_to].author_id
        if retweeter not in influencers or original not in influencers:
            continue
        if retweeter == original:
            self_loops[retweeter] = self_loops.get(retweeter, 0) + 1
        else:
            key = (retweeter, original)
            edges[key] = edges.get(key, 0) + 1
    return InfluencerNetwork(nodes=nodes, edges=edges, self_loops=self_loops)


def coordination_metrics(
    net: InfluencerNetwork,
    stats: InfluencerStats,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> CoordinationMetrics:
    """Combine network density, reciprocity, and tweet share into one score.

    operation_score = w1 * edge_density + w2 * reciprocity + w3 * tweet_share.
    """
    w1, w2, w3 = weights
    if min(w1, w2, w3) < 0.0 or abs(w1 + w2 + w3 - 1.0) > 1e-9:
        raise ValueError("weights must be non-negative and sum to 1")
    n = len(net.nodes)
    degenerate = n < 2
    density = len(net.edges) / (n * (n - 1)) if not degenerate else 0.0
    pairs = {tuple(sorted(edge)) for edge in net.edges}
    bidirectional = sum(
        1 for a, b in pairs if (a, b) in net.edges and (b, a) in net.edges
    )
    reciprocity = bidirectional / len(pairs) if pairs else 0.0
    tweet_share = stats.tweet_share
    score = w1 * density + w2 * reciprocity + w3 * tweet_share
    return CoordinationMetrics(
        edge_density=density,
        bidirectional_pair_count=bidirectional,
        reciprocity=reciprocity,
        self_loop_count=sum(net.self_loops.values()),
        influencer_tweet_share=tweet_share,
        operation_score=score,
        degenerate=degenerate,
    )


def influencer_overlap(a: list[InfluencerProfile], b: list[InfluencerProfile]) -> set[str]:
    """Authors appearing in both influencer lists (exposed as a query)."""
    return {p.author_id for p in a} & {p.author_id for p in b}
