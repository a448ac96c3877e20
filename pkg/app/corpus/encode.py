from __future__ import annotations

from typing import List

from app.corpus.documents import Document, EncodedPair
from app.corpus.vocab import EOS, Vocabulary
from app.errors import EmptySource

MAX_SOURCE_TOKENS = 400
MAX_TARGET_TOKENS = 90


def encode_source(tokens: List[str], vocab: Vocabulary, max_len: int = MAX_SOURCE_TOKENS) -> List[int]:
    if not tokens:
        raise EmptySource("document has no tokens")
    return vocab.encode(tokens[:max_len])


def encode_target(tokens: List[str], vocab: Vocabulary, max_len: int = MAX_TARGET_TOKENS) -> List[int]:
    """Summary ids truncated to ``max_len - 1`` with EOS appended."""
    return vocab.encode(tokens[: max_len - 1]) + [EOS]


def encode_pair(
    doc: Document,
    vocab: Vocabulary,
    max_source: int = MAX_SOURCE_TOKENS,
    max_target: int = MAX_TARGET_TOKENS,
) -> EncodedPair:
    source_ids = encode_source(doc.tokens, vocab, max_source)
    return EncodedPair(
        source_ids=source_ids,
        target_ids=encode_target(doc.summary, vocab, max_target),
        source_positions=list(range(len(source_ids))),
        doc_id=doc.id,
    )
