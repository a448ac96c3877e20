"""Corpus-level scoring of a summarization system's outputs."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from app.config import worker_count
from app.errors import EmptyCorpus, MissingReference
from app.evaluate.novelty import NoveltyReport, aggregate_novelty, novelty
from app.evaluate.rouge import rouge

logger = logging.getLogger(__name__)


class SystemReport(BaseModel):
    n_docs: int
    rouge1: float  # mean F1 in [0, 1]
    rouge2: float
    rougeL: float
    novelty: NoveltyReport = Field(default_factory=NoveltyReport)
    mean_length: float
    stemmed: bool = False


def _score_one(args) -> Tuple[float, float, float, Optional[NoveltyReport], int]:
    output, reference, source, stem = args
    scores = rouge(output, reference, stem)
    report = novelty(output, source) if source is not None and output else None
    return scores.r1.f1, scores.r2.f1, scores.rl.f1, report, len(output)


def evaluate_system(
    outputs: Mapping[str, Sequence[str]],
    refs: Mapping[str, Sequence[str]],
    docs: Optional[Mapping[str, Sequence[str]]] = None,
    stem: bool = False,
) -> SystemReport:
    """
    Mean R-1/R-2/R-L F1 over every output id, novelty of the outputs against
    their source documents (when ``docs`` maps id -> source tokens) and mean
    output length in words.
    """
    if not outputs:
        raise EmptyCorpus("no system outputs to evaluate")
    ids = sorted(outputs)
    missing = [i for i in ids if i not in refs]
    if missing:
        raise MissingReference(f"{len(missing)} outputs have no reference, e.g. {missing[0]!r}")
    if docs is not None:
        missing = [i for i in ids if i not in docs]
        if missing:
            raise MissingReference(f"{len(missing)} outputs have no source document, e.g. {missing[0]!r}")

    jobs = [(outputs[i], refs[i], docs[i] if docs is not None else None, stem) for i in ids]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        rows: List[Tuple] = list(pool.map(_score_one, jobs))

    n = len(rows)
    reports = [r[3] for r in rows if r[3] is not None]
    logger.info("Scored %d outputs", n)
    return SystemReport(
        n_docs=n,
        rouge1=sum(r[0] for r in rows) / n,
        rouge2=sum(r[1] for r in rows) / n,
        rougeL=sum(r[2] for r in rows) / n,
        novelty=aggregate_novelty(reports),
        mean_length=sum(r[4] for r in rows) / n,
        stemmed=stem,
    )


def evaluate_many(
    systems: Mapping[str, Mapping[str, Sequence[str]]],
    refs: Mapping[str, Sequence[str]],
    docs: Optional[Mapping[str, Sequence[str]]] = None,
    stem: bool = False,
) -> Dict[str, SystemReport]:
    return {name: evaluate_system(outputs, refs, docs, stem) for name, outputs in systems.items()}
