from pathlib import Path
from typing import List

import numpy as np
import pytest

from app.corpus.documents import Document, EncodedPair, RawRecord
from app.corpus.toy import make_toy_corpus
from app.corpus.vocab import EOS
from app.ingest.corpus_files import document_from_record
from app.model.config import ModelConfig
from app.topics.lda import TopicVectors

FIXTURES = Path(__file__).parent / "fixtures"

TINY_V = 50
TINY_K = 8


def tiny_model_config(variant: str = "enc_ttD_dec_tD", **overrides) -> ModelConfig:
    settings = dict(
        vocab_size=TINY_V, f=16, f_prime=TINY_K, d=16, k=3, enc_layers=2, dec_layers=2,
        max_source_positions=40, max_target_positions=20, dropout=0.0, variant=variant,
    )
    settings.update(overrides)
    return ModelConfig(**settings)


def random_topics(rng: np.random.Generator, V: int = TINY_V, K: int = TINY_K) -> TopicVectors:
    word = rng.random((V, K)) + 0.05
    doc = rng.random(K) + 0.05
    return TopicVectors(word / word.sum(axis=1, keepdims=True), doc / doc.sum())


def random_pair(rng: np.random.Generator, src_len: int = 7, tgt_len: int = 5, V: int = TINY_V) -> EncodedPair:
    source = rng.integers(4, V, size=src_len).tolist()
    target = rng.integers(4, V, size=tgt_len - 1).tolist() + [EOS]
    return EncodedPair(source, target, doc_id="pair")


def docs_from_records(records: List[dict]) -> List[Document]:
    docs = [document_from_record(RawRecord.model_validate(r)) for r in records]
    return [d for d in docs if d is not None]


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def toy_docs() -> List[Document]:
    return docs_from_records(make_toy_corpus(100, seed=0))
