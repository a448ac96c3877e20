"""Length-capped beam search over the convolutional decoder."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from app.corpus.documents import EncodedPair
from app.corpus.vocab import BOS, EOS, PAD
from app.diffcore.ops import log_softmax_values
from app.model.convs2s import EncoderOut, decode_step, encode_source
from app.model.params import ModelParams
from app.topics.lda import TopicVectors

DEFAULT_BEAM = 10
DEFAULT_MAX_LEN = 90


@dataclass
class Hypothesis:
    token_ids: List[int]  # BOS first
    logprob: float
    finished: bool = False

    @property
    def generated(self) -> List[int]:
        """Tokens after BOS, EOS included."""
        return self.token_ids[1:]

    @property
    def tokens(self) -> List[int]:
        """Generated tokens with EOS stripped."""
        return [t for t in self.token_ids[1:] if t != EOS]

    def score(self, length_normalize: bool = False) -> float:
        if length_normalize:
            return self.logprob / max(len(self.generated), 1)
        return self.logprob


def _next_logprobs(params: ModelParams, prefix: List[int], enc: EncoderOut,
                   doc_topic: Optional[np.ndarray]) -> np.ndarray:
    logp = log_softmax_values(decode_step(params, prefix, enc, doc_topic))
    logp[[PAD, BOS]] = -np.inf
    return logp


def _check_max_len(params: ModelParams, max_len: int) -> None:
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    if max_len > params.config.max_target_positions:
        raise ValueError(f"max_len {max_len} exceeds {params.config.max_target_positions} target positions")


def beam_search(
    source: EncodedPair,
    topics: Optional[TopicVectors],
    params: ModelParams,
    beam: int = DEFAULT_BEAM,
    max_len: int = DEFAULT_MAX_LEN,
    length_normalize: bool = False,
) -> List[Hypothesis]:
    """
    Ranked hypotheses, best first. Each step expands every live hypothesis over
    the vocabulary and keeps the ``beam`` best totals; ties go to the earlier
    parent, then the lower token id. A hypothesis finishes on EOS or after
    ``max_len`` generated tokens and retires to the pool.

    Search ends when nothing is live or, for raw scores, when the best live
    log-probability is no better than the best finished one. Only finished
    hypotheses are returned.
    """
    if beam < 1:
        raise ValueError(f"beam must be >= 1, got {beam}")
    _check_max_len(params, max_len)

    enc = encode_source(params, source, topics)
    doc_topic = topics.doc_topic if topics is not None else None
    live = [Hypothesis([BOS], 0.0)]
    pool: List[Hypothesis] = []

    while live:
        totals = np.stack([h.logprob + _next_logprobs(params, h.token_ids, enc, doc_topic) for h in live])
        flat = totals.reshape(-1)
        T = totals.shape[1]
        next_live = []
        for idx in np.argsort(-flat, kind="stable")[:beam]:
            if not np.isfinite(flat[idx]):
                break
            parent, token = divmod(int(idx), T)
            ids = live[parent].token_ids + [token]
            hyp = Hypothesis(ids, float(flat[idx]))
            if token == EOS or len(ids) - 1 >= max_len:
                hyp.finished = True
                pool.append(hyp)
            else:
                next_live.append(hyp)
        live = next_live
        # log-probabilities only fall as a prefix grows
        if pool and live and not length_normalize:
            if max(h.logprob for h in live) <= max(h.logprob for h in pool):
                break

    return sorted(pool, key=lambda h: -h.score(length_normalize))


def greedy(
    source: EncodedPair,
    topics: Optional[TopicVectors],
    params: ModelParams,
    max_len: int = DEFAULT_MAX_LEN,
) -> Hypothesis:
    """Argmax decoding (lowest token id on ties)."""
    _check_max_len(params, max_len)
    enc = encode_source(params, source, topics)
    doc_topic = topics.doc_topic if topics is not None else None
    hyp = Hypothesis([BOS], 0.0)
    while not hyp.finished:
        logp = _next_logprobs(params, hyp.token_ids, enc, doc_topic)
        token = int(np.argmax(logp))
        hyp.token_ids.append(token)
        hyp.logprob += float(logp[token])
        hyp.finished = token == EOS or len(hyp.token_ids) - 1 >= max_len
    return hyp
