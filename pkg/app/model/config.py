from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

Variant = Literal["plain", "enc_t", "enc_t_dec_tD", "enc_ttD", "enc_ttD_dec_tD"]

VARIANTS = ("plain", "enc_t", "enc_t_dec_tD", "enc_ttD", "enc_ttD_dec_tD")


class ModelConfig(BaseModel):
    """Shape and ablation settings of the (topic-aware) convolutional seq2seq model."""

    model_config = ConfigDict(extra="forbid")

    vocab_size: int = Field(default=50_000, ge=5)
    f: int = Field(default=512, ge=1)
    f_prime: int = Field(default=512, ge=0)
    d: int = Field(default=512, ge=1)
    k: int = Field(default=3, ge=1)
    enc_layers: int = Field(default=4, ge=0)
    dec_layers: int = Field(default=4, ge=0)
    max_source_positions: int = Field(default=400, ge=1)
    max_target_positions: int = Field(default=90, ge=1)
    variant: Variant = "enc_ttD_dec_tD"
    dropout: float = Field(default=0.2, ge=0.0, lt=1.0)
    weight_norm: bool = True
    layer_norm: bool = False
    scale_residual: bool = False

    @model_validator(mode="after")
    def _check_topic_width(self) -> "ModelConfig":
        if self.variant != "plain" and self.f_prime < 1:
            raise ValueError(f"variant {self.variant} needs f_prime >= 1 (the LDA topic count)")
        return self

    @property
    def encoder_topics(self) -> bool:
        return self.variant != "plain"

    @property
    def decoder_topics(self) -> bool:
        return self.variant.endswith("dec_tD")

    @property
    def topic_width(self) -> int:
        return self.f_prime if self.encoder_topics else 0

    @property
    def embed_width(self) -> int:
        """Encoder embedding width f + f'; also the attention space width."""
        return self.f + self.topic_width

    @property
    def decoder_embed_width(self) -> int:
        return self.f + (self.f_prime if self.decoder_topics else 0)
