from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from app.corpus.documents import Document
from app.errors import ConfigError, MissingInput

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.90, 0.05, 0.05)

# key names used by the published XSum split file
SPLIT_FILE_KEYS = {"train": "train", "validation": "val", "test": "test"}


def _split_key(seed: int, doc_id: str) -> str:
    return hashlib.sha256(f"{seed}:{doc_id}".encode("utf-8")).hexdigest()


def split_corpus(
    docs: Sequence[Document],
    ratios: Tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> Tuple[List[Document], List[Document], List[Document]]:
    """Deterministic train/val/test split ordered by a hash of (seed, document id)."""
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ConfigError(f"split ratios must be three non-negative values summing to 1, got {ratios}")

    ordered = sorted(docs, key=lambda d: (_split_key(seed, d.id), d.id))
    n = len(ordered)
    n_train = round(ratios[0] * n)
    n_val = min(round(ratios[1] * n), n - n_train)
    train = ordered[:n_train]
    val = ordered[n_train:n_train + n_val]
    test = ordered[n_train + n_val:]
    logger.info("Split %d documents into %d/%d/%d", n, len(train), len(val), len(test))
    return train, val, test


def load_split_file(path: Path) -> Dict[str, str]:
    """Map document id -> split name ("train", "val", "test") from an XSum split JSON."""
    path = Path(path)
    if not path.exists():
        raise MissingInput(f"split file not found: {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    assignment: Dict[str, str] = {}
    for key, split in SPLIT_FILE_KEYS.items():
        for doc_id in payload.get(key, []):
            assignment[str(doc_id)] = split
    return assignment


def split_by_assignment(
    docs: Sequence[Document], assignment: Dict[str, str]
) -> Tuple[List[Document], List[Document], List[Document]]:
    parts: Dict[str, List[Document]] = {"train": [], "val": [], "test": []}
    dropped = 0
    for doc in docs:
        split = assignment.get(doc.id)
        if split is None:
            dropped += 1
            continue
        parts[split].append(doc)
    if dropped:
        logger.warning("Dropped %d documents not listed in the split file", dropped)
    return parts["train"], parts["val"], parts["test"]
