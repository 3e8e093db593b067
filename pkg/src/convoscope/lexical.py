"""Hashed TF-IDF text vectors: the deterministic fallback embedding."""

from __future__ import annotations

import hashlib
import math
import re

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

_TOKEN_RE = re.compile(r"\w+")


def _terms(text: str, ngram_range: tuple[int, int]) -> list[str]:
    tokens = _TOKEN_RE.findall(text.lower())
    lo, hi = ngram_range
    out: list[str] = []
    for size in range(lo, hi + 1):
        out.extend(" ".join(tokens[i : i + size]) for i in range(len(tokens) - size + 1))
    return out


def _bucket(term: str, n_features: int) -> int:
    digest = hashlib.blake2b(term.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % n_features


class LexicalEmbedder(BaseEstimator, TransformerMixin):
    """TF-IDF over unigrams+bigrams, hashed to a fixed width, L2-normalized.

    Vocabulary-free: term indices come from a stable content hash, so the
    mapping is identical across runs and machines. IDF weights are learned
    from the texts passed to ``fit``.
    """

    def __init__(self, n_features: int = 512, ngram_range: tuple[int, int] = (1, 2)):
        self.n_features = n_features
        self.ngram_range = ngram_range

    def fit(self, texts, y=None):
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")
        df: dict[str, int] = {}
        n_docs = 0
        for text in texts:
            n_docs += 1
            for term in set(_terms(text, self.ngram_range)):
                df[term] = df.get(term, 0) + 1
        self.n_docs_ = n_docs
        self.df_ = df
        return self

    def transform(self, texts) -> np.ndarray:
        rows = []
        for text in texts:
            vec = np.zeros(self.n_features)
            counts: dict[str, int] = {}
            for term in _terms(text, self.ngram_range):
                counts[term] = counts.get(term, 0) + 1
            for term, tf in counts.items():
                idf = math.log((1 + self.n_docs_) / (1 + self.df_.get(term, 0))) + 1.0
                vec[_bucket(term, self.n_features)] += tf * idf
            norm = np.linalg.norm(vec)
            if norm > 0.0:
                vec /= norm
            rows.append(vec)
        return np.vstack(rows) if rows else np.empty((0, self.n_features))
