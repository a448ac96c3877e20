from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Tuple

from app.config import DecodeConfig, worker_count
from app.corpus.documents import EncodedPair
from app.corpus.encode import MAX_SOURCE_TOKENS, encode_source
from app.corpus.tokenize import detokenize, tokenize
from app.corpus.vocab import Vocabulary
from app.decode.beam import beam_search
from app.errors import EmptySource, ShapeMismatch
from app.model.params import ModelParams
from app.topics.lda import DEFAULT_INFER_ITERS, TopicModel, TopicVectors, infer_doc_topics, word_topic_dist

logger = logging.getLogger(__name__)


class Summarizer:
    """Trained artifacts bundled for repeated decoding; read-only after construction."""

    def __init__(
        self,
        vocab: Vocabulary,
        params: ModelParams,
        topic_model: Optional[TopicModel] = None,
        decode: DecodeConfig = DecodeConfig(),
        infer_iters: int = DEFAULT_INFER_ITERS,
        seed: int = 0,
    ):
        config = params.config
        if len(vocab) != config.vocab_size:
            raise ShapeMismatch(f"vocabulary has {len(vocab)} entries, model expects {config.vocab_size}")
        if config.encoder_topics:
            if topic_model is None:
                raise ShapeMismatch(f"variant {config.variant} needs a topic model")
            if topic_model.K != config.f_prime or topic_model.V != config.vocab_size:
                raise ShapeMismatch(
                    f"topic model is K={topic_model.K} V={topic_model.V}, "
                    f"model expects K={config.f_prime} V={config.vocab_size}"
                )
        self.vocab = vocab
        self.params = params
        self.topic_model = topic_model
        self.decode = decode
        self.infer_iters = infer_iters
        self.seed = seed
        self.word_topics = word_topic_dist(topic_model) if config.encoder_topics else None
        self.max_source = min(MAX_SOURCE_TOKENS, config.max_source_positions)
        self.max_len = min(decode.max_len, config.max_target_positions)

    def topics_for(self, source_ids: List[int]) -> Optional[TopicVectors]:
        if self.word_topics is None:
            return None
        doc_topic = infer_doc_topics(self.topic_model, source_ids, self.infer_iters, self.seed)
        return TopicVectors(self.word_topics, doc_topic)

    def summarize_tokens(self, tokens: List[str], beam: Optional[int] = None) -> List[str]:
        source_ids = encode_source(tokens, self.vocab, self.max_source)
        hyps = beam_search(
            EncodedPair(source_ids, []),
            self.topics_for(source_ids),
            self.params,
            beam=beam or self.decode.beam,
            max_len=self.max_len,
            length_normalize=self.decode.length_normalize,
        )
        return self.vocab.decode(hyps[0].tokens, strip_specials=True)

    def __call__(self, raw_document: str, beam: Optional[int] = None) -> str:
        tokens = tokenize(raw_document)
        if not tokens:
            raise EmptySource("document is empty")
        return detokenize(self.summarize_tokens(tokens, beam))

    def summarize_many(self, items: Iterable[Tuple[str, List[str]]], beam: Optional[int] = None) -> List[dict]:
        """{"id", "summary"} for (id, tokens) items, in input order."""
        def _one(item):
            doc_id, tokens = item
            return {"id": doc_id, "summary": detokenize(self.summarize_tokens(tokens, beam))}

        items = list(items)
        logger.info("Summarizing %d documents (beam=%d)", len(items), beam or self.decode.beam)
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            return list(pool.map(_one, items))


def summarize(
    raw_document: str,
    vocab: Vocabulary,
    topics: Optional[TopicModel],
    params: ModelParams,
    beam: int = 10,
    seed: int = 0,
) -> str:
    """One-sentence summary of ``raw_document``: tokenize, encode, infer t_D, beam search."""
    return Summarizer(vocab, params, topics, DecodeConfig(beam=beam), seed=seed)(raw_document)
