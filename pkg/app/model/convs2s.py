"""
Topic-conditioned convolutional encoder-decoder.

Encoder input per source token i:   e_i = [(x_i + p_i) ; t'_i * t_D]   (width f + f')
Decoder input per prefix token i:   g_i = [(x'_i + p'_i) ; t_D]         (width f + f')
Every decoder layer attends over the final encoder states z^u and mixes
z^u + e into its output (multi-hop attention). The variant in ModelConfig picks
which topic blocks are present; "plain" is the topic-free ConvS2S.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.corpus.documents import EncodedPair
from app.corpus.vocab import BOS, PAD
from app.diffcore import ops
from app.diffcore.tensor import Tensor
from app.errors import EmptyTargets, PositionOverflow, ShapeMismatch
from app.model.params import ModelParams
from app.topics.lda import TopicVectors

RESIDUAL_SCALE = math.sqrt(0.5)


@dataclass
class ForwardContext:
    """Training flag and dropout stream for one forward pass."""

    training: bool = False
    rng: Optional[np.random.Generator] = None

    def dropout(self, x: Tensor, p: float) -> Tensor:
        return ops.dropout(x, p, self.training, self.rng)


EVAL = ForwardContext()


@dataclass
class EncoderOut:
    z_u: Tensor  # m x (f+f'), projected final encoder states
    e: Tensor  # m x (f+f'), input element embeddings


def _check_positions(positions: Sequence[int], limit: int, side: str) -> np.ndarray:
    positions = np.asarray(positions, dtype=np.int64)
    if positions.size and (positions.max() >= limit or positions.min() < 0):
        raise PositionOverflow(f"{side} position {int(positions.max())} outside [0, {limit})")
    return positions


def _require_topics(params: ModelParams, topics: Optional[TopicVectors]) -> TopicVectors:
    config = params.config
    if topics is None:
        raise ShapeMismatch(f"variant {config.variant} needs topic vectors")
    if topics.doc_topic.shape != (config.f_prime,):
        raise ShapeMismatch(f"t_D has shape {topics.doc_topic.shape}, expected ({config.f_prime},)")
    return topics


def embed_source(
    params: ModelParams,
    ids: Sequence[int],
    positions: Sequence[int],
    topics: Optional[TopicVectors] = None,
) -> Tensor:
    """Topic-aware source embeddings, one row per source token."""
    config = params.config
    positions = _check_positions(positions, config.max_source_positions, "source")
    x = ops.add(ops.embedding(params["embed.tokens"], ids), ops.embedding(params["embed.src_positions"], positions))
    if not config.encoder_topics:
        return x

    topics = _require_topics(params, topics)
    word = topics.word_topics[np.asarray(ids, dtype=np.int64)]
    if word.shape[1] != config.f_prime:
        raise ShapeMismatch(f"t' has width {word.shape[1]}, expected {config.f_prime}")
    block = word if config.variant == "enc_t" else word * topics.doc_topic
    return ops.concat([x, ops.constant(block)])


def embed_target_prefix(
    params: ModelParams,
    ids: Sequence[int],
    positions: Sequence[int],
    doc_topic: Optional[np.ndarray] = None,
) -> Tensor:
    """Embeddings for the decoder prefix; t_D repeats on every row."""
    config = params.config
    positions = _check_positions(positions, config.max_target_positions, "target")
    x = ops.add(ops.embedding(params["embed.tokens"], ids), ops.embedding(params["embed.tgt_positions"], positions))
    if not config.decoder_topics:
        return x
    if doc_topic is None or np.shape(doc_topic) != (config.f_prime,):
        raise ShapeMismatch(f"decoder topic conditioning needs t_D of width {config.f_prime}")
    return ops.concat([x, ops.constant(np.tile(doc_topic, (len(positions), 1)))])


def _residual(params: ModelParams, out: Tensor, residual: Tensor, ln_name: str) -> Tensor:
    config = params.config
    out = ops.add(out, residual)
    if config.scale_residual:
        out = ops.scale(out, RESIDUAL_SCALE)
    if config.layer_norm:
        out = ops.layer_norm(out, params[f"{ln_name}.gain"], params[f"{ln_name}.bias"])
    return out


def _conv_glu(params: ModelParams, name: str, h: Tensor, pad_mode: str, ctx: ForwardContext) -> Tensor:
    x = ctx.dropout(h, params.config.dropout)
    return ops.glu(ops.conv1d(x, params.weight(name), params.bias(name), pad_mode))


def _project(params: ModelParams, name: str, x: Tensor) -> Tensor:
    return ops.linear(x, params.weight(name), params.bias(name))


def encode(params: ModelParams, e: Tensor, ctx: ForwardContext = EVAL) -> EncoderOut:
    """Project e to width d, run the symmetric conv/GLU/residual stack, project back to f+f'."""
    if e.shape[0] < 1:
        raise ShapeMismatch("encoder needs at least one source position")
    h = _project(params, "encoder.in_proj", ctx.dropout(e, params.config.dropout))
    for l in range(params.config.enc_layers):
        out = _conv_glu(params, f"encoder.conv{l}", h, "symmetric", ctx)
        h = _residual(params, out, h, f"encoder.ln{l}")
    return EncoderOut(z_u=_project(params, "encoder.out_proj", h), e=e)


def attend(
    params: ModelParams,
    layer: int,
    h_l: Tensor,
    g: Tensor,
    enc: EncoderOut,
) -> Tuple[Tensor, Tensor]:
    """
    One attention hop. d = W_d h + b + g scores against z^u; the context is the
    attention-weighted sum of z^u + e, projected to width d.
    Returns (context n x d, attention n x m).
    """
    E = params.config.embed_width
    if g.shape[-1] != E or enc.z_u.shape[-1] != E:
        raise ShapeMismatch(f"attention space width mismatch: g {g.shape}, z_u {enc.z_u.shape}, expected {E}")
    query = ops.add(_project(params, f"decoder.attn{layer}.query", h_l), g)
    attn = ops.softmax(ops.matmul(query, ops.transpose(enc.z_u)))
    context = ops.matmul(attn, ops.add(enc.z_u, enc.e))
    return _project(params, f"decoder.attn{layer}.out", context), attn


def _attention_input(params: ModelParams, g: Tensor) -> Tensor:
    """g in the attention width; variants without decoder topics get a zero topic block."""
    missing = params.config.embed_width - g.shape[-1]
    if missing <= 0:
        return g
    return ops.concat([g, ops.constant(np.zeros((g.shape[0], missing)))])


def decode(
    params: ModelParams,
    prefix_ids: Sequence[int],
    enc: EncoderOut,
    doc_topic: Optional[np.ndarray] = None,
    ctx: ForwardContext = EVAL,
) -> Tuple[Tensor, List[Tensor]]:
    """Decoder pass over the gold target prefix: logits (n x T) and one attention map per decoder layer."""
    config = params.config
    if len(prefix_ids) < 1:
        raise ShapeMismatch("decoder prefix must hold at least the BOS token")
    g = embed_target_prefix(params, prefix_ids, range(len(prefix_ids)), doc_topic)
    g = ctx.dropout(g, config.dropout)
    g_att = _attention_input(params, g)

    h = _project(params, "decoder.in_proj", g)
    attention_maps = []
    for l in range(config.dec_layers):
        out = _conv_glu(params, f"decoder.conv{l}", h, "causal", ctx)
        context, attn = attend(params, l, out, g_att, enc)
        h = _residual(params, ops.add(out, context), h, f"decoder.ln{l}")
        attention_maps.append(attn)

    h = ctx.dropout(h, config.dropout)
    return _project(params, "decoder.out", h), attention_maps


def encode_source(params: ModelParams, pair: EncodedPair, topics: Optional[TopicVectors],
                  ctx: ForwardContext = EVAL) -> EncoderOut:
    e = embed_source(params, pair.source_ids, pair.source_positions, topics)
    return encode(params, e, ctx)


def decode_step(
    params: ModelParams,
    prefix_ids: Sequence[int],
    enc: EncoderOut,
    doc_topic: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Next-token logits (width T) after ``prefix_ids`` (BOS first)."""
    logits, _ = decode(params, prefix_ids, enc, doc_topic)
    return logits.values[-1]


def forward_nll(
    params: ModelParams,
    pair: EncodedPair,
    topics: Optional[TopicVectors] = None,
    ctx: ForwardContext = EVAL,
) -> Tuple[Tensor, int]:
    """Summed token NLL over non-PAD targets and the number of those targets."""
    enc = encode_source(params, pair, topics, ctx)
    prefix = [BOS] + list(pair.target_ids[:-1])
    doc_topic = topics.doc_topic if topics is not None else None
    logits, _ = decode(params, prefix, enc, doc_topic, ctx)
    mask = [t == PAD for t in pair.target_ids]
    loss, _ = ops.softmax_xent(logits, pair.target_ids, mask, reduction="sum")
    return loss, len(mask) - sum(mask)


def forward_loss(
    params: ModelParams,
    pair: EncodedPair,
    topics: Optional[TopicVectors] = None,
    ctx: ForwardContext = EVAL,
) -> Tensor:
    """Mean token NLL of the target given its gold prefix."""
    total, count = forward_nll(params, pair, topics, ctx)
    if count == 0:
        raise EmptyTargets("target is all padding")
    return ops.scale(total, 1.0 / count)
