"""
Latent Dirichlet allocation by collapsed Gibbs sampling.

Training produces a :class:`TopicModel`; from it come the per-word topic
distributions t' (``word_topic_dist``) and, per document, the document topic
vector t_D (``infer_doc_topics``). Documents are bags of vocabulary ids.
"""
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from tqdm import tqdm

from app.config import worker_count
from app.corpus.vocab import SPECIAL_TOKENS, Vocabulary
from app.errors import EmptyCorpus

logger = logging.getLogger(__name__)

DEFAULT_TOPICS = 512
DEFAULT_BETA = 0.01
DEFAULT_INFER_ITERS = 50

SweepCallback = Callable[[int, np.ndarray, np.ndarray], None]
InferCallback = Callable[[int, np.ndarray], None]


def default_alpha(K: int) -> float:
    return 50.0 / K


@dataclass
class TopicModel:
    K: int
    V: int
    alpha: float
    beta: float
    topic_word_counts: np.ndarray  # K x V, int64
    topic_totals: np.ndarray  # K, int64
    phi: np.ndarray = field(init=False)  # K x V, rows sum to 1

    def __post_init__(self) -> None:
        self.phi = (self.topic_word_counts + self.beta) / (
            self.topic_totals[:, None] + self.V * self.beta
        )
        self._phi_by_word = np.ascontiguousarray(self.phi.T)

    @property
    def word_totals(self) -> np.ndarray:
        return self.topic_word_counts.sum(axis=0)

    @classmethod
    def from_phi(cls, K: int, V: int, alpha: float, beta: float,
                 phi: np.ndarray, topic_totals: np.ndarray) -> "TopicModel":
        """Rebuild the exact integer counts from a stored phi matrix and topic totals."""
        counts = np.rint(phi * (topic_totals[:, None] + V * beta) - beta).astype(np.int64)
        return cls(K, V, alpha, beta, counts, np.asarray(topic_totals, dtype=np.int64))


@dataclass
class TopicVectors:
    """Topic inputs for one document: t' per vocabulary word and t_D."""

    word_topics: np.ndarray  # V x K
    doc_topic: np.ndarray  # K


def stopword_ids(bags: Iterable[Sequence[int]], fraction: float = 0.001) -> Set[int]:
    """The most frequent ``fraction`` of word types across ``bags``; special ids never count."""
    n_special = len(SPECIAL_TOKENS)
    counts = Counter()
    for bag in bags:
        counts.update(i for i in bag if i >= n_special)
    n_stop = int(fraction * len(counts))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return {w for w, _ in ranked[:n_stop]}


def document_bag(ids: Iterable[int], stopwords: Set[int] = frozenset()) -> List[int]:
    """Corpus ids usable by LDA: specials and stopwords removed."""
    n_special = len(SPECIAL_TOKENS)
    return [i for i in ids if i >= n_special and i not in stopwords]


def _sample(weights: np.ndarray, u: float) -> int:
    cum = np.cumsum(weights)
    return min(int(np.searchsorted(cum, u * cum[-1], side="right")), len(weights) - 1)


def train_lda(
    docs: Sequence[Sequence[int]],
    K: int = DEFAULT_TOPICS,
    alpha: Optional[float] = None,
    beta: float = DEFAULT_BETA,
    iters: int = 200,
    seed: int = 0,
    vocab_size: Optional[int] = None,
    on_sweep: Optional[SweepCallback] = None,
    progress: bool = False,
) -> TopicModel:
    """
    Collapsed Gibbs sampling for ``iters`` sweeps over every token.

    ``on_sweep(sweep, topic_totals, doc_topic_counts)`` is called after each sweep.
    """
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    alpha = default_alpha(K) if alpha is None else alpha

    lengths = [len(d) for d in docs]
    if not docs or sum(lengths) == 0:
        raise EmptyCorpus("LDA needs at least one token")
    words = np.fromiter((w for d in docs for w in d), dtype=np.int64, count=sum(lengths))
    owner = np.repeat(np.arange(len(docs)), lengths)
    V = int(vocab_size) if vocab_size is not None else int(words.max()) + 1
    if words.min() < 0 or words.max() >= V:
        raise ValueError(f"word ids must lie in [0, {V})")

    rng = np.random.default_rng(seed)
    z = rng.integers(K, size=words.size)
    n_dk = np.zeros((len(docs), K), dtype=np.int64)
    n_wk = np.zeros((V, K), dtype=np.int64)
    n_k = np.zeros(K, dtype=np.int64)
    np.add.at(n_dk, (owner, z), 1)
    np.add.at(n_wk, (words, z), 1)
    np.add.at(n_k, z, 1)

    v_beta = V * beta
    logger.info("Training LDA: K=%d V=%d docs=%d tokens=%d sweeps=%d", K, V, len(docs), words.size, iters)
    for sweep in tqdm(range(iters), desc="gibbs", disable=not progress):
        uniforms = rng.random(words.size)
        for i in range(words.size):
            w, d, k = words[i], owner[i], z[i]
            n_dk[d, k] -= 1
            n_wk[w, k] -= 1
            n_k[k] -= 1

            k = _sample((n_wk[w] + beta) / (n_k + v_beta) * (n_dk[d] + alpha), uniforms[i])

            z[i] = k
            n_dk[d, k] += 1
            n_wk[w, k] += 1
            n_k[k] += 1
        if on_sweep is not None:
            on_sweep(sweep, n_k.copy(), n_dk.copy())

    return TopicModel(K, V, alpha, beta, np.ascontiguousarray(n_wk.T), n_k)


def word_topic_dist(model: TopicModel) -> np.ndarray:
    """t' per word: p(k|w) proportional to phi[k, w] p(k); unseen words get 1/K."""
    prior = model.topic_totals / max(model.topic_totals.sum(), 1)
    joint = model.phi.T * prior
    totals = joint.sum(axis=1, keepdims=True)
    out = np.divide(joint, totals, out=np.full_like(joint, 1.0 / model.K), where=totals > 0)
    out[model.word_totals == 0] = 1.0 / model.K
    return out


def infer_doc_topics(
    model: TopicModel,
    doc: Sequence[int],
    iters: int = DEFAULT_INFER_ITERS,
    seed=0,
    on_sweep: Optional[InferCallback] = None,
) -> np.ndarray:
    """
    t_D by Gibbs sampling with the topic-word distributions held fixed.

    Words outside the model or never seen in training are skipped. The estimate
    comes from the last sample: (n_dk + alpha) / (N + K alpha).
    ``on_sweep(sweep, doc_topic_counts)`` is called after each sweep.
    """
    seen = model.word_totals
    words = np.array([w for w in doc if 0 <= w < model.V and seen[w] > 0], dtype=np.int64)
    n_dk = np.zeros(model.K, dtype=np.int64)
    if words.size:
        rng = np.random.default_rng(seed)
        z = rng.integers(model.K, size=words.size)
        np.add.at(n_dk, z, 1)
        phi_w = model._phi_by_word[words]
        for sweep in range(iters):
            uniforms = rng.random(words.size)
            for i in range(words.size):
                n_dk[z[i]] -= 1
                k = _sample(phi_w[i] * (n_dk + model.alpha), uniforms[i])
                z[i] = k
                n_dk[k] += 1
            if on_sweep is not None:
                on_sweep(sweep, n_dk.copy())
    return (n_dk + model.alpha) / (words.size + model.K * model.alpha)


def infer_many(
    model: TopicModel,
    bags: Sequence[Sequence[int]],
    iters: int = DEFAULT_INFER_ITERS,
    seed: int = 0,
) -> List[np.ndarray]:
    """t_D for many documents; each document draws from its own (seed, index) stream."""
    def _infer(item):
        index, bag = item
        return infer_doc_topics(model, bag, iters, seed=[seed, index])

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(_infer, enumerate(bags)))


def top_words(model: TopicModel, vocab: Vocabulary, n: int = 12) -> List[List[str]]:
    """The ``n`` most probable words of every topic."""
    out = []
    for row in model.phi:
        order = np.lexsort((np.arange(model.V), -row))[:n]
        out.append([vocab.id_to_token[i] for i in order if i < len(vocab)])
    return out


@dataclass
class CorpusTopics:
    """Shared t' table plus the t_D of every document, keyed by document id."""

    word_topics: np.ndarray  # V x K
    doc_topics: Dict[str, np.ndarray]

    def for_doc(self, doc_id: str) -> TopicVectors:
        if doc_id not in self.doc_topics:
            raise KeyError(f"no topic vector for document {doc_id!r}")
        return TopicVectors(self.word_topics, self.doc_topics[doc_id])


def corpus_topics(
    model: TopicModel,
    docs: Sequence[Tuple[str, Sequence[int]]],
    iters: int = DEFAULT_INFER_ITERS,
    seed: int = 0,
) -> CorpusTopics:
    """Infer t_D for (doc id, source ids) pairs. Stopwords and specials were never
    seen in training, so inference skips them without a separate list."""
    vectors = infer_many(model, [ids for _, ids in docs], iters, seed)
    return CorpusTopics(word_topic_dist(model), {doc_id: v for (doc_id, _), v in zip(docs, vectors)})
