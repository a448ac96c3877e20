from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, field_validator


class RawRecord(BaseModel):
    """One line of an XSum-format JSONL corpus file."""

    model_config = ConfigDict(extra="ignore")

    id: str
    document: List[str]
    summary: str


class Document(BaseModel):
    """A tokenized article (list of sentences) paired with its gold summary."""

    id: str
    sentences: List[List[str]]
    summary: List[str]
    raw_text: Optional[str] = None

    @field_validator("sentences")
    @classmethod
    def _check_sentences(cls, value: List[List[str]]) -> List[List[str]]:
        for sentence in value:
            _check_tokens(sentence)
        return value

    @field_validator("summary")
    @classmethod
    def _check_summary(cls, value: List[str]) -> List[str]:
        return _check_tokens(value)

    @property
    def tokens(self) -> List[str]:
        return [tok for sentence in self.sentences for tok in sentence]

    def to_record(self) -> dict:
        """Tokenized form in the corpus JSONL layout (tokens re-joined by spaces)."""
        return {
            "id": self.id,
            "document": [" ".join(s) for s in self.sentences],
            "summary": " ".join(self.summary),
        }


def _check_tokens(tokens: List[str]) -> List[str]:
    for tok in tokens:
        if not tok or tok != tok.lower():
            raise ValueError(f"tokens must be non-empty and lowercase, got {tok!r}")
    return tokens


@dataclass
class EncodedPair:
    """Id-encoded (source, target) pair ready for the model."""

    source_ids: List[int]
    target_ids: List[int]
    source_positions: List[int] = field(default_factory=list)
    doc_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.source_positions:
            self.source_positions = list(range(len(self.source_ids)))
