from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app.config import worker_count
from app.corpus.documents import Document, RawRecord
from app.corpus.tokenize import sentence_tokenize, tokenize
from app.errors import DataError, MissingInput, MissingSummaryClass
from app.ingest.html_extract import extract_summary
from app.store.artifacts import read_jsonl

logger = logging.getLogger(__name__)


def document_from_record(record: RawRecord) -> Optional[Document]:
    """Tokenize one raw record; returns None when nothing usable remains."""
    sentences = [s for s in (tokenize(text) for text in record.document) if s]
    summary = tokenize(record.summary)
    if not sentences or not summary:
        logger.warning("Skipping %s: empty document or summary after tokenization", record.id)
        return None
    return Document(id=record.id, sentences=sentences, summary=summary)


def load_jsonl_corpus(path: Path) -> List[Document]:
    """Read an XSum-format JSONL file ({"id", "document": [...], "summary"}) into Documents."""
    path = Path(path)
    if not path.exists():
        raise MissingInput(f"corpus file not found: {path}")

    records = []
    for lineno, payload in enumerate(read_jsonl(path), start=1):
        try:
            records.append(RawRecord.model_validate(payload))
        except ValidationError as exc:
            raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        docs = list(pool.map(document_from_record, records))
    kept = [d for d in docs if d is not None]
    logger.info("Loaded %d/%d documents from %s", len(kept), len(records), path)
    return kept


def document_from_html(doc_id: str, html: str) -> Optional[Document]:
    try:
        summary_text, body_text = extract_summary(html)
    except MissingSummaryClass:
        logger.warning("Skipping %s: no summary element", doc_id)
        return None

    sentences = sentence_tokenize(body_text)
    summary = tokenize(summary_text)
    if not sentences or not summary:
        logger.warning("Skipping %s: empty body or summary", doc_id)
        return None
    return Document(id=doc_id, sentences=sentences, summary=summary, raw_text=body_text)


def ingest_html_dir(directory: Path) -> List[Document]:
    """Every ``<id>.html`` file in ``directory`` becomes a Document; pages without a summary are dropped."""
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingInput(f"HTML directory not found: {directory}")

    files = sorted(directory.glob("*.html"))

    def _load(path: Path) -> Optional[Document]:
        return document_from_html(path.stem, path.read_text(encoding="utf-8", errors="replace"))

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        docs = list(pool.map(_load, files))
    kept = [d for d in docs if d is not None]
    logger.info("Ingested %d/%d HTML pages from %s", len(kept), len(files), directory)
    return kept
