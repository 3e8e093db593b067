"""Synthetic corpora with planted hashtag communities and retweet cliques.

Ground truth comes straight from the generator, so recovered groups,
influencer rankings, and coordination scores can be checked exactly. Records
are emitted in the default ingestion schema and re-parsed through the corpus
module, which validates the corpus invariants by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, SchemaMap, parse_records, resolve_retweets

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


@dataclass
class OperationSpec:
    """A planted influence operation plus its organic audience."""

    clique_size: int = 10
    mutual_rate: float = 0.8
    self_rate: float = 0.3
    organic_authors: int = 20
    organic_rate: float = 0.1
    messages_per_member: int = 2
    target_community: int = 0

    def __post_init__(self) -> None:
        for name in ("clique_size", "organic_authors", "messages_per_member"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("mutual_rate", "self_rate", "organic_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


@dataclass
class PlantSpec:
    n_communities: int = 3
    hashtags_per_community: int = 5
    messages_per_community: int = 200
    noise_messages: int = 100
    operation: OperationSpec | None = None
    seed: int = 0
    authors_per_community: int = 20
    noise_hashtag_pool: int = 30

    def __post_init__(self) -> None:
        for name in (
            "n_communities",
            "hashtags_per_community",
            "messages_per_community",
            "noise_messages",
            "authors_per_community",
            "noise_hashtag_pool",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class GroundTruth:
    hashtag_community: dict[str, int] = field(default_factory=dict)
    message_community: dict[str, int] = field(default_factory=dict)
    author_role: dict[str, str] = field(default_factory=dict)
    clique_authors: tuple[str, ...] = ()
    organic_authors: tuple[str, ...] = ()

    def community_hashtags(self, community: int) -> list[str]:
        return sorted(t for t, c in self.hashtag_community.items() if c == community)

    def as_dict(self) -> dict:
        return {
            "hashtag_community": self.hashtag_community,
            "message_community": self.message_community,
            "author_role": self.author_role,
            "clique_authors": list(self.clique_authors),
            "organic_authors": list(self.organic_authors),
        }


def _word(rng: np.random.Generator, syllables: int = 3) -> str:
    return "".join(
        _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
        for _ in range(syllables)
    )


def _phrase(rng: np.random.Generator, pool: list[str]) -> str:
    # >= 4 textual tokens so the <3-token filter never removes planted messages.
    count = 4 + int(rng.integers(0, 4))
    return " ".join(pool[int(rng.integers(len(pool)))] for _ in range(count))


def synth_records(spec: PlantSpec) -> tuple[list[dict], GroundTruth]:
    """Generate ingestion-schema records and the matching ground truth."""
    rng = np.random.default_rng(spec.seed)
    truth = GroundTruth()
    records: list[dict] = []
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return f"m{counter:06d}"

    def post(author: str, text: str, retweeted: str | None = None) -> dict:
        record = {
            "id": next_id(),
            "author": author,
            "text": text,
            "timestamp": 1_640_000_000 + counter,
            "retweeted_id": retweeted,
        }
        records.append(record)
        return record

    community_tags = []
    word_pools = []
    for c in range(spec.n_communities):
        tags = [f"c{c}tag{i}" for i in range(spec.hashtags_per_community)]
        community_tags.append(tags)
        for tag in tags:
            truth.hashtag_community[tag] = c
        word_pools.append([_word(rng) for _ in range(24)])

    for c in range(spec.n_communities):
        tags = community_tags[c]
        for _ in range(spec.messages_per_community):
            author = f"user_c{c}_{int(rng.integers(max(spec.authors_per_community, 1)))}"
            truth.author_role.setdefault(author, "community")
            n_tags = int(rng.integers(1, min(3, len(tags)) + 1)) if tags else 0
            picked = list(rng.choice(tags, size=n_tags, replace=False)) if n_tags else []
            text = _phrase(rng, word_pools[c]) + "".join(f" #{t}" for t in picked)
            record = post(author, text)
            truth.message_community[record["id"]] = c

    clique_message_ids: dict[str, list[str]] = {}
    op = spec.operation
    if op is not None and op.clique_size > 0:
        clique = [f"op_{i:02d}" for i in range(op.clique_size)]
        truth.clique_authors = tuple(clique)
        target = min(op.target_community, max(spec.n_communities - 1, 0))
        tags = community_tags[target] if community_tags else []
        pool = word_pools[target] if word_pools else [_word(rng) for _ in range(24)]
        for author in clique:
            truth.author_role[author] = "clique"
            clique_message_ids[author] = []
            for _ in range(op.messages_per_member):
                n_tags = int(rng.integers(1, min(3, len(tags)) + 1)) if tags else 0
                picked = list(rng.choice(tags, size=n_tags, replace=False)) if n_tags else []
                text = _phrase(rng, pool) + "".join(f" #{t}" for t in picked)
                record = post(author, text)
                truth.message_community[record["id"]] = target
                clique_message_ids[author].append(record["id"])

    if spec.noise_messages:
        noise_tags = [f"noisetag{i}" for i in range(max(spec.noise_hashtag_pool, 1))]
        noise_pool = [_word(rng) for _ in range(40)]
        for _ in range(spec.noise_messages):
            author = f"user_n{int(rng.integers(20))}"
            truth.author_role.setdefault(author, "noise")
            n_tags = int(rng.integers(1, 3))
            picked = list(rng.choice(noise_tags, size=min(n_tags, len(noise_tags)), replace=False))
            post(author, _phrase(rng, noise_pool) + "".join(f" #{t}" for t in picked))

    if op is not None and op.clique_size > 0:
        clique = list(truth.clique_authors)
        for i in range(len(clique)):
            for j in range(i + 1, len(clique)):
                if rng.random() < op.mutual_rate:
                    for a, b in ((clique[i], clique[j]), (clique[j], clique[i])):
                        targets = clique_message_ids[b]
                        if targets:
                            chosen = targets[int(rng.integers(len(targets)))]
                            post(a, f"RT @{b}", retweeted=chosen)
        for author in clique:
            for msg_id in clique_message_ids[author]:
                if rng.random() < op.self_rate:
                    post(author, f"RT @{author}", retweeted=msg_id)
        organic = [f"org_{i:02d}" for i in range(op.organic_authors)]
        truth.organic_authors = tuple(organic)
        all_clique_messages = [m for ids in clique_message_ids.values() for m in ids]
        for author in organic:
            truth.author_role[author] = "organic"
            for msg_id in all_clique_messages:
                if rng.random() < op.organic_rate:
                    post(author, "RT popular", retweeted=msg_id)

    return records, truth


def records_to_lines(records: list[dict]) -> list[str]:
    return [json.dumps(r, sort_keys=True, ensure_ascii=False) for r in records]


def synth_corpus(spec: PlantSpec) -> tuple[Corpus, GroundTruth]:
    """Generate, then ingest through the real parser and retweet resolver."""
    records, truth = synth_records(spec)
    corpus = parse_records(records_to_lines(records), SchemaMap.preset("default"))
    return resolve_retweets(corpus), truth


def write_synth_corpus(spec: PlantSpec, out_dir: str | Path) -> tuple[Path, Path]:
    """Write corpus.jsonl plus the ground-truth sidecar; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, truth = synth_records(spec)
    corpus_path = out / "corpus.jsonl"
    corpus_path.write_text("\n".join(records_to_lines(records)) + "\n", "utf-8")
    truth_path = out / "ground_truth.json"
    truth_path.write_text(json.dumps(truth.as_dict(), indent=2, sort_keys=True) + "\n", "utf-8")
    return corpus_path, truth_path
