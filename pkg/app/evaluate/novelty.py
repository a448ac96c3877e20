from __future__ import annotations

from typing import Dict, Iterable, Sequence, Set, Tuple

from pydantic import BaseModel, Field

ORDERS = (1, 2, 3, 4)


class NoveltyReport(BaseModel):
    """Percentage of summary n-gram types absent from the source, per order n.

    Orders longer than the summary have no n-grams and are left out.
    """

    pct_novel: Dict[int, float] = Field(default_factory=dict)


def ngram_types(tokens: Sequence[str], n: int) -> Set[Tuple[str, ...]]:
    return {tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)}


def novelty(summary: Sequence[str], doc_tokens: Sequence[str], orders: Sequence[int] = ORDERS) -> NoveltyReport:
    pct: Dict[int, float] = {}
    for n in orders:
        grams = ngram_types(summary, n)
        if not grams:
            continue
        novel = grams - ngram_types(doc_tokens, n)
        pct[n] = 100.0 * len(novel) / len(grams)
    return NoveltyReport(pct_novel=pct)


def aggregate_novelty(reports: Iterable[NoveltyReport], orders: Sequence[int] = ORDERS) -> NoveltyReport:
    """Mean per-document percentage for each order, over documents where it is defined."""
    sums = {n: 0.0 for n in orders}
    counts = {n: 0 for n in orders}
    for report in reports:
        for n, value in report.pct_novel.items():
            if n in sums:
                sums[n] += value
                counts[n] += 1
    return NoveltyReport(pct_novel={n: sums[n] / counts[n] for n in orders if counts[n]})
