"""Topic model fit by collapsed Gibbs sampling over token-topic assignments."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator


class GibbsLda(BaseEstimator):
    """Latent Dirichlet allocation with a collapsed Gibbs sampler.

    ``fit`` takes a sequence of tokenized documents (lists of strings).
    After fitting:

    - ``components_`` is the topic-word matrix (n_topics x vocab), rows
      normalized with beta smoothing.
    - ``doc_topic_`` is the document-topic matrix (n_docs x n_topics), rows
      normalized with alpha smoothing.
    - ``iteration_token_counts_`` records the total assigned-token count
      after every sweep (conservation check hook).

    The sampler is single-threaded and fully determined by ``random_state``.
    """

    def __init__(
        self,
        n_topics: int = 10,
        n_iterations: int = 200,
        alpha: float = 0.1,
        beta: float = 0.01,
        random_state: int = 0,
    ):
        self.n_topics = n_topics
        self.n_iterations = n_iterations
        self.alpha = alpha
        self.beta = beta
        self.random_state = random_state

    def fit(self, docs, y=None):
        if self.n_topics < 2:
            raise ValueError("n_topics must be >= 2")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ValueError("alpha and beta must be > 0")

        vocab: dict[str, int] = {}
        encoded: list[np.ndarray] = []
        doc_index: list[int] = []
        for i, doc in enumerate(docs):
            tokens = [t for t in doc if t]
            if not tokens:
                continue
            ids = [vocab.setdefault(tok, len(vocab)) for tok in tokens]
            encoded.append(np.asarray(ids, dtype=np.int64))
            doc_index.append(i)
        if not encoded:
            raise ValueError("no non-empty documents to fit")

        rng = np.random.default_rng(self.random_state)
        K = self.n_topics
        V = len(vocab)
        D = len(encoded)
        n_dk = np.zeros((D, K), dtype=np.int64)
        n_kw = np.zeros((K, V), dtype=np.int64)
        n_k = np.zeros(K, dtype=np.int64)
        assignments: list[np.ndarray] = []
        for d, ids in enumerate(encoded):
            z = rng.integers(0, K, size=ids.size)
            assignments.append(z)
            for w, k in zip(ids, z):
                n_dk[d, k] += 1
                n_kw[k, w] += 1
                n_k[k] += 1

        total_tokens = int(n_k.sum())
        v_beta = V * self.beta
        alpha = self.alpha
        beta = self.beta
        token_counts: list[int] = []
        for _ in range(self.n_iterations):
            for d, ids in enumerate(encoded):
                z = assignments[d]
                row = n_dk[d]
                for pos in range(ids.size):
                    w = ids[pos]
                    k = z[pos]
                    row[k] -= 1
                    n_kw[k, w] -= 1
                    n_k[k] -= 1
                    p = (n_kw[:, w] + beta) * (row + alpha) / (n_k + v_beta)
                    cdf = np.cumsum(p)
                    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
                    k = min(k, K - 1)
                    z[pos] = k
                    row[k] += 1
                    n_kw[k, w] += 1
                    n_k[k] += 1
            token_counts.append(int(n_k.sum()))

        self.vocabulary_ = vocab
        self.feature_names_ = [None] * V
        for tok, idx in vocab.items():
            self.feature_names_[idx] = tok
        self.components_ = (n_kw + beta) / (n_k + v_beta)[:, None]
        lengths = np.array([ids.size for ids in encoded], dtype=np.float64)
        self.doc_topic_ = (n_dk + alpha) / (lengths + K * alpha)[:, None]
        self.doc_index_ = tuple(doc_index)
        self.iteration_token_counts_ = token_counts
        self.total_tokens_ = total_tokens
        return self

    def top_words(self, topic: int, n_words: int = 20) -> list[tuple[str, float]]:
        """Highest-probability words of one topic, ties broken alphabetically."""
        weights = self.components_[topic]
        order = sorted(range(weights.size), key=lambda i: (-weights[i], self.feature_names_[i]))
        return [(self.feature_names_[i], float(weights[i])) for i in order[:n_words]]

    def dominant_topics(self) -> np.ndarray:
        """Most probable topic per fitted document (first topic wins ties)."""
        return np.argmax(self.doc_topic_, axis=1)
