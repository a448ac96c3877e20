"""
On-disk artifact formats.

- vocab:       one ``token<TAB>id`` line per entry, specials first
- topic model: magic, header (K, V, alpha, beta), dense phi, topic_totals;
               little-endian 64-bit floats/ints
- checkpoint:  magic, header length, JSON header (model config + parameter
               names/shapes), parameter blobs as little-endian float64
- corpora, encoded pairs and system outputs: JSON Lines
- training log: CSV (epoch, train_loss, val_ppl, lr)
"""
import csv
import json
import struct
from pathlib import Path
from typing import Iterable, Iterator, List, Tuple

import numpy as np
from pydantic import ValidationError

from app.corpus.documents import Document, EncodedPair
from app.corpus.vocab import SPECIAL_TOKENS, Vocabulary
from app.diffcore.tensor import Tensor
from app.errors import ArtifactFormatError, MissingInput
from app.model.config import ModelConfig
from app.model.params import ModelParams
from app.topics.lda import TopicModel

TOPIC_MAGIC = b"XSFLDA01"
TOPIC_HEADER = struct.Struct("<qqdd")
CHECKPOINT_MAGIC = b"XSFCKPT1"
LENGTH = struct.Struct("<Q")
TRAINING_LOG_FIELDS = ["epoch", "train_loss", "val_ppl", "lr"]


def _require(path: Path) -> Path:
    path = Path(path)
    if not path.exists():
        raise MissingInput(f"not found: {path}")
    return path


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# ---------- JSON Lines ----------

def read_jsonl(path: Path) -> Iterator[dict]:
    with open(_require(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ArtifactFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc


def write_jsonl(path: Path, rows: Iterable[dict]) -> int:
    count = 0
    with open(_ensure_parent(path), "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def write_documents(path: Path, docs: Iterable[Document]) -> int:
    """Tokenized documents, one {"id", "sentences", "summary"} object per line."""
    return write_jsonl(path, (d.model_dump(exclude={"raw_text"}) for d in docs))


def read_documents(path: Path) -> List[Document]:
    docs = []
    for lineno, row in enumerate(read_jsonl(path), start=1):
        try:
            docs.append(Document.model_validate(row))
        except ValidationError as exc:
            raise ArtifactFormatError(f"{path}:{lineno}: bad document: {exc}") from exc
    return docs


def write_pairs(path: Path, pairs: Iterable[EncodedPair]) -> int:
    return write_jsonl(path, ({"id": p.doc_id, "source": p.source_ids, "target": p.target_ids} for p in pairs))


def read_pairs(path: Path) -> List[EncodedPair]:
    pairs = []
    for lineno, row in enumerate(read_jsonl(path), start=1):
        try:
            pairs.append(EncodedPair(list(row["source"]), list(row["target"]), doc_id=row["id"]))
        except (KeyError, TypeError) as exc:
            raise ArtifactFormatError(f"{path}:{lineno}: bad encoded pair: {exc}") from exc
    return pairs


# ---------- vocabulary ----------

def save_vocab(vocab: Vocabulary, path: Path) -> None:
    with open(_ensure_parent(path), "w", encoding="utf-8") as fh:
        for idx, token in enumerate(vocab.id_to_token):
            fh.write(f"{token}\t{idx}\n")


def load_vocab(path: Path) -> Vocabulary:
    tokens: List[str] = []
    with open(_require(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            try:
                token, idx = line.rstrip("\n").split("\t")
                if int(idx) != lineno:
                    raise ValueError(f"id {idx} on line {lineno + 1}")
            except ValueError as exc:
                raise ArtifactFormatError(f"{path}: bad vocabulary line {lineno + 1}: {exc}") from exc
            tokens.append(token)
    if tokens[: len(SPECIAL_TOKENS)] != SPECIAL_TOKENS:
        raise ArtifactFormatError(f"{path}: vocabulary must start with {SPECIAL_TOKENS}")
    try:
        return Vocabulary(tokens[len(SPECIAL_TOKENS):])
    except ValueError as exc:
        raise ArtifactFormatError(f"{path}: {exc}") from exc


# ---------- topic model ----------

def save_topic_model(model: TopicModel, path: Path) -> None:
    with open(_ensure_parent(path), "wb") as fh:
        fh.write(TOPIC_MAGIC)
        fh.write(TOPIC_HEADER.pack(model.K, model.V, model.alpha, model.beta))
        fh.write(model.phi.astype("<f8").tobytes())
        fh.write(model.topic_totals.astype("<i8").tobytes())


def load_topic_model(path: Path) -> TopicModel:
    raw = _require(path).read_bytes()
    if not raw.startswith(TOPIC_MAGIC):
        raise ArtifactFormatError(f"{path}: not a topic model file")
    offset = len(TOPIC_MAGIC)
    K, V, alpha, beta = TOPIC_HEADER.unpack_from(raw, offset)
    offset += TOPIC_HEADER.size
    expected = offset + 8 * (K * V + K)
    if len(raw) != expected:
        raise ArtifactFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    phi = np.frombuffer(raw, dtype="<f8", count=K * V, offset=offset).reshape(K, V).astype(np.float64)
    totals = np.frombuffer(raw, dtype="<i8", count=K, offset=offset + 8 * K * V).astype(np.int64)
    return TopicModel.from_phi(K, V, alpha, beta, phi, totals)


# ---------- checkpoints ----------

def save_checkpoint(params: ModelParams, path: Path) -> None:
    header = {
        "config": params.config.model_dump(),
        "params": [{"name": name, "shape": list(t.shape)} for name, t in params],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(_ensure_parent(path), "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(LENGTH.pack(len(header_bytes)))
        fh.write(header_bytes)
        for _, tensor in params:
            fh.write(tensor.values.astype("<f8").tobytes())


def load_checkpoint(path: Path) -> ModelParams:
    raw = _require(path).read_bytes()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise ArtifactFormatError(f"{path}: not a checkpoint file")
    offset = len(CHECKPOINT_MAGIC)
    (header_len,) = LENGTH.unpack_from(raw, offset)
    offset += LENGTH.size
    try:
        header = json.loads(raw[offset:offset + header_len].decode("utf-8"))
        config = ModelConfig.model_validate(header["config"])
    except (ValueError, KeyError) as exc:
        raise ArtifactFormatError(f"{path}: bad checkpoint header: {exc}") from exc
    offset += header_len

    tensors = {}
    for entry in header["params"]:
        shape: Tuple[int, ...] = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        if offset + 8 * count > len(raw):
            raise ArtifactFormatError(f"{path}: truncated at parameter {entry['name']}")
        values = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape)
        tensors[entry["name"]] = Tensor(values.astype(np.float64), requires_grad=True, name=entry["name"])
        offset += 8 * count
    return ModelParams(config, tensors)


# ---------- training log ----------

def append_training_log(path: Path, row: dict) -> None:
    path = _ensure_parent(path)
    new_file = not path.exists()
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRAINING_LOG_FIELDS)
        if new_file:
            writer.writeheader()
        writer.writerow({key: row[key] for key in TRAINING_LOG_FIELDS})


__all__ = [
    "read_jsonl",
    "write_jsonl",
    "write_documents",
    "read_documents",
    "write_pairs",
    "read_pairs",
    "save_vocab",
    "load_vocab",
    "save_topic_model",
    "load_topic_model",
    "save_checkpoint",
    "load_checkpoint",
    "append_training_log",
]
