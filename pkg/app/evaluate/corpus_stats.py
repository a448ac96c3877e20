"""Dataset statistics and the extractive-bias analysis of a corpus."""
from __future__ import annotations

import logging
from typing import Sequence

from pydantic import BaseModel

from app.corpus.documents import Document
from app.errors import EmptyCorpus
from app.evaluate.extractive import ext_oracle, lead
from app.evaluate.novelty import NoveltyReport, aggregate_novelty, novelty
from app.evaluate.system import SystemReport, evaluate_system

logger = logging.getLogger(__name__)

SENTENCE_END = {".", "?", "!"}


class CorpusStats(BaseModel):
    n_docs: int
    avg_doc_words: float
    avg_doc_sentences: float
    avg_summary_words: float
    avg_summary_sentences: float
    doc_vocab: int
    summary_vocab: int


class CorpusAnalysis(BaseModel):
    stats: CorpusStats
    gold_novelty: NoveltyReport
    lead: SystemReport
    ext_oracle: SystemReport


def count_sentences(tokens: Sequence[str]) -> int:
    """Sentences in a token list: one per sentence-final mark, plus an unterminated tail."""
    if not tokens:
        return 0
    ends = sum(1 for t in tokens if t in SENTENCE_END)
    return ends + (0 if tokens[-1] in SENTENCE_END else 1)


def corpus_stats(docs: Sequence[Document]) -> CorpusStats:
    if not docs:
        raise EmptyCorpus("no documents")
    n = len(docs)
    doc_vocab, summary_vocab = set(), set()
    for doc in docs:
        doc_vocab.update(doc.tokens)
        summary_vocab.update(doc.summary)
    return CorpusStats(
        n_docs=n,
        avg_doc_words=sum(len(d.tokens) for d in docs) / n,
        avg_doc_sentences=sum(len(d.sentences) for d in docs) / n,
        avg_summary_words=sum(len(d.summary) for d in docs) / n,
        avg_summary_sentences=sum(count_sentences(d.summary) for d in docs) / n,
        doc_vocab=len(doc_vocab),
        summary_vocab=len(summary_vocab),
    )


def analyze_corpus(docs: Sequence[Document], stem: bool = False) -> CorpusAnalysis:
    """Sizes and lengths, novelty of the gold summaries, and LEAD / EXT-ORACLE ROUGE."""
    stats = corpus_stats(docs)
    refs = {d.id: d.summary for d in docs}
    sources = {d.id: d.tokens for d in docs}
    lead_out = {d.id: lead(d) for d in docs}
    oracle_out = {d.id: ext_oracle(d, d.summary, stem)[0] for d in docs}
    logger.info("Analyzed %d documents", stats.n_docs)
    return CorpusAnalysis(
        stats=stats,
        gold_novelty=aggregate_novelty(novelty(d.summary, d.tokens) for d in docs),
        lead=evaluate_system(lead_out, refs, sources, stem),
        ext_oracle=evaluate_system(oracle_out, refs, sources, stem),
    )
