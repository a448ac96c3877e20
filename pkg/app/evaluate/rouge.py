"""
ROUGE-1, ROUGE-2 and ROUGE-L over token lists.

N-gram overlap is the clipped multiset intersection; ROUGE-L uses the longest
common subsequence. No stopword removal. Porter stemming is off unless asked for.
"""
from __future__ import annotations

from collections import Counter
from functools import lru_cache
from typing import List, Sequence

from nltk.stem.porter import PorterStemmer
from pydantic import BaseModel

from app.errors import EmptyReference


class PRF(BaseModel):
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0

    @classmethod
    def from_counts(cls, overlap: int, candidate_units: int, reference_units: int) -> "PRF":
        p = overlap / candidate_units if candidate_units else 0.0
        r = overlap / reference_units if reference_units else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(precision=p, recall=r, f1=f1)


class RougeScores(BaseModel):
    r1: PRF
    r2: PRF
    rl: PRF

    @property
    def mean_f1(self) -> float:
        return (self.r1.f1 + self.r2.f1 + self.rl.f1) / 3.0


@lru_cache(maxsize=1)
def _stemmer() -> PorterStemmer:
    return PorterStemmer()


def stem_tokens(tokens: Sequence[str]) -> List[str]:
    stemmer = _stemmer()
    return [stemmer.stem(t) for t in tokens]


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def _ngram_prf(candidate: Sequence[str], reference: Sequence[str], n: int) -> PRF:
    cand, ref = ngrams(candidate, n), ngrams(reference, n)
    overlap = sum((cand & ref).values())
    return PRF.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def rouge(candidate: Sequence[str], reference: Sequence[str], stem: bool = False) -> RougeScores:
    if not reference:
        raise EmptyReference("reference summary is empty")
    if stem:
        candidate, reference = stem_tokens(candidate), stem_tokens(reference)
    return RougeScores(
        r1=_ngram_prf(candidate, reference, 1),
        r2=_ngram_prf(candidate, reference, 2),
        rl=PRF.from_counts(lcs_length(candidate, reference), len(candidate), len(reference)),
    )
