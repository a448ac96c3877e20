from __future__ import annotations

import logging
from collections import Counter
from typing import Dict, Iterable, List

from app.corpus.documents import Document

logger = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIAL_TOKENS = ["<pad>", "<s>", "</s>", "<unk>"]

DEFAULT_VOCAB_CAP = 50_000


class Vocabulary:
    """Bijective token <-> id map. Ids 0-3 are PAD, BOS, EOS, UNK."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.id_to_token: List[str] = list(SPECIAL_TOKENS)
        self.token_to_id: Dict[str, int] = {t: i for i, t in enumerate(SPECIAL_TOKENS)}
        for token in tokens:
            if token in self.token_to_id:
                raise ValueError(f"duplicate vocabulary token {token!r}")
            self.token_to_id[token] = len(self.id_to_token)
            self.id_to_token.append(token)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.token_to_id.get(t, UNK) for t in tokens]

    def decode(self, ids: Iterable[int], strip_specials: bool = False) -> List[str]:
        out = []
        for i in ids:
            if strip_specials and i in (PAD, BOS, EOS):
                continue
            out.append(self.id_to_token[i])
        return out


def count_tokens(docs: Iterable[Document]) -> Counter:
    counts: Counter = Counter()
    for doc in docs:
        for sentence in doc.sentences:
            counts.update(sentence)
        counts.update(doc.summary)
    return counts


def build_vocab(corpus: Iterable[Document], cap: int = DEFAULT_VOCAB_CAP) -> Vocabulary:
    """Keep the ``cap - 4`` most frequent tokens, ties broken lexicographically."""
    if cap < len(SPECIAL_TOKENS):
        raise ValueError(f"vocabulary cap must be >= {len(SPECIAL_TOKENS)}, got {cap}")
    counts = count_tokens(corpus)
    for special in SPECIAL_TOKENS:
        counts.pop(special, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [tok for tok, _ in ranked[: cap - len(SPECIAL_TOKENS)]]
    logger.info("Vocabulary: kept %d of %d token types (cap=%d)", len(kept), len(counts), cap)
    return Vocabulary(kept)
