"""Pipeline configuration: JSON file validated by pydantic, overridden by CLI flags."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.corpus.encode import MAX_SOURCE_TOKENS, MAX_TARGET_TOKENS
from app.errors import ConfigError, MissingInput
from app.model.config import ModelConfig

load_dotenv()

PROJECT_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = Path(os.getenv("XSUMFORGE_DATA_DIR") or PROJECT_ROOT / "data")


def worker_count() -> int:
    """Thread cap from XSUMFORGE_THREADS (default 1)."""
    raw = os.getenv("XSUMFORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"XSUMFORGE_THREADS must be an integer, got {raw!r}")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathsConfig(_Section):
    corpus: Optional[Path] = None
    html_dir: Optional[Path] = None
    split_file: Optional[Path] = None
    work_dir: Path = DATA_DIR
    vocab: Optional[Path] = None
    topics: Optional[Path] = None
    checkpoints: Optional[Path] = None
    reports: Optional[Path] = None

    def resolved(self, name: str) -> Path:
        """Configured path, or its default location under ``work_dir``."""
        defaults = {
            "vocab": self.work_dir / "vocab.tsv",
            "topics": self.work_dir / "topics.lda",
            "checkpoints": self.work_dir / "checkpoints",
            "reports": self.work_dir / "reports",
        }
        value = getattr(self, name)
        return Path(value) if value is not None else defaults[name]

    def split_path(self, split: str) -> Path:
        """Tokenized documents of one split."""
        return self.work_dir / f"{split}.jsonl"

    def pairs_path(self, split: str) -> Path:
        """Id-encoded pairs of one split."""
        return self.work_dir / f"{split}.ids.jsonl"


class CorpusConfig(_Section):
    vocab_cap: int = Field(default=50_000, ge=5)
    max_source_tokens: int = Field(default=MAX_SOURCE_TOKENS, ge=1, le=MAX_SOURCE_TOKENS)
    max_target_tokens: int = Field(default=MAX_TARGET_TOKENS, ge=2, le=MAX_TARGET_TOKENS)
    split_ratios: Tuple[float, float, float] = (0.90, 0.05, 0.05)

    @field_validator("split_ratios")
    @classmethod
    def _ratios_sum_to_one(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if abs(sum(value) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1, got {value}")
        return value


class LDAConfig(_Section):
    topics: int = Field(default=512, ge=2)
    alpha: Optional[float] = Field(default=None, gt=0)
    beta: float = Field(default=0.01, gt=0)
    iters: int = Field(default=200, ge=1)
    infer_iters: int = Field(default=50, ge=1)
    stopword_fraction: float = Field(default=0.001, ge=0, lt=1)

    @property
    def resolved_alpha(self) -> float:
        return self.alpha if self.alpha is not None else 50.0 / self.topics


class TrainerConfig(_Section):
    batch_size: int = Field(default=32, ge=1)
    lr: float = Field(default=0.10, gt=0, le=0.10)
    momentum: float = Field(default=0.99, ge=0, lt=1)
    clip_norm: float = Field(default=0.1, gt=0)
    min_lr: float = Field(default=1e-4, gt=0)
    anneal_after_epochs: int = Field(default=30, ge=1)
    max_epochs: Optional[int] = Field(default=None, ge=1)
    sort_window: int = Field(default=1024, ge=1)


class DecodeConfig(_Section):
    beam: int = Field(default=10, ge=1)
    max_len: int = Field(default=MAX_TARGET_TOKENS, ge=1, le=MAX_TARGET_TOKENS)
    length_normalize: bool = False


class PipelineConfig(_Section):
    seed: int = 0
    paths: PathsConfig = Field(default_factory=PathsConfig)
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)
    lda: LDAConfig = Field(default_factory=LDAConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    trainer: TrainerConfig = Field(default_factory=TrainerConfig)
    decode: DecodeConfig = Field(default_factory=DecodeConfig)

    @model_validator(mode="after")
    def _positions_cover_truncation(self) -> "PipelineConfig":
        if self.model.max_source_positions < self.corpus.max_source_tokens:
            raise ValueError(
                f"model.max_source_positions {self.model.max_source_positions} "
                f"< corpus.max_source_tokens {self.corpus.max_source_tokens}"
            )
        if self.model.max_target_positions < self.corpus.max_target_tokens:
            raise ValueError(
                f"model.max_target_positions {self.model.max_target_positions} "
                f"< corpus.max_target_tokens {self.corpus.max_target_tokens}"
            )
        return self

    @classmethod
    def from_file(cls, path: Optional[Path]) -> "PipelineConfig":
        if path is None:
            return cls()
        path = Path(path)
        if not path.exists():
            raise MissingInput(f"config file not found: {path}")
        try:
            return cls.model_validate(json.loads(path.read_text(encoding="utf-8")))
        except (ValidationError, json.JSONDecodeError) as exc:
            raise ConfigError(f"invalid config {path}: {exc}") from exc

    def with_overrides(self, **overrides) -> "PipelineConfig":
        """Apply dotted-path overrides (``"model.variant": "plain"``); ``None`` values are ignored."""
        data = self.model_dump()
        for dotted, value in overrides.items():
            if value is None:
                continue
            node = data
            *parents, leaf = dotted.split(".")
            for key in parents:
                node = node[key]
            node[leaf] = value
        try:
            return type(self).model_validate(data)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
