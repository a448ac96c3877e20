"""Extractive reference systems: RANDOM, LEAD and EXT-ORACLE."""
from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

import numpy as np

from app.corpus.documents import Document
from app.errors import EmptyDocument, EmptyReference
from app.evaluate.rouge import RougeScores, rouge

SYSTEMS = ("random", "lead", "ext_oracle")


def _require_sentences(doc: Document) -> None:
    if not doc.sentences:
        raise EmptyDocument(f"document {doc.id} has no sentences")


def lead(doc: Document) -> List[str]:
    """First sentence of the article body."""
    _require_sentences(doc)
    return list(doc.sentences[0])


def random_sentence(doc: Document, seed=0) -> List[str]:
    _require_sentences(doc)
    index = int(np.random.default_rng(seed).integers(len(doc.sentences)))
    return list(doc.sentences[index])


def ext_oracle(doc: Document, gold: Sequence[str], stem: bool = False) -> Tuple[List[str], RougeScores]:
    """The sentence with the best mean of R-1, R-2 and R-L F1 against ``gold``; earliest wins ties."""
    _require_sentences(doc)
    if not gold:
        raise EmptyReference(f"document {doc.id} has an empty gold summary")
    best, best_scores = None, None
    for sentence in doc.sentences:
        scores = rouge(sentence, gold, stem)
        if best_scores is None or scores.mean_f1 > best_scores.mean_f1:
            best, best_scores = sentence, scores
    return list(best), best_scores


def baseline_outputs(docs: Sequence[Document], seed: int = 0, stem: bool = False) -> Dict[str, Dict[str, List[str]]]:
    """system name -> doc id -> summary tokens. RANDOM draws from the (seed, doc index) stream."""
    outputs: Dict[str, Dict[str, List[str]]] = {name: {} for name in SYSTEMS}
    for index, doc in enumerate(docs):
        outputs["random"][doc.id] = random_sentence(doc, [seed, index])
        outputs["lead"][doc.id] = lead(doc)
        outputs["ext_oracle"][doc.id] = ext_oracle(doc, doc.summary, stem)[0]
    return outputs
