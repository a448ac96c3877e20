import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.corpus.documents import EncodedPair
from app.corpus.vocab import BOS, EOS
from app.diffcore import ops
from app.diffcore.gradcheck import check_gradients, max_relative_error
from app.diffcore.ops import log_softmax_values, softmax_values
from app.errors import PositionOverflow, ShapeMismatch
from app.model.config import VARIANTS, ModelConfig
from app.model.convs2s import (
    EncoderOut,
    attend,
    decode,
    decode_step,
    embed_source,
    embed_target_prefix,
    encode,
    encode_source,
    forward_loss,
)
from app.model.params import ModelParams
from app.topics.lda import TopicVectors
from tests.conftest import TINY_K, TINY_V, random_pair, random_topics, tiny_model_config


def _model(variant="enc_ttD_dec_tD", seed=0, **overrides):
    return ModelParams.initialize(tiny_model_config(variant, **overrides), seed=seed)


# ---------- embeddings ----------

@pytest.mark.parametrize("variant,width", [("plain", 16), ("enc_t", 24), ("enc_ttD_dec_tD", 24)])
def test_source_embedding_width(variant, width, rng):
    params = _model(variant)
    out = embed_source(params, [4, 5, 6], [0, 1, 2], random_topics(rng))
    assert out.shape == (3, width)


def test_source_topic_block_is_pointwise_product(rng):
    params = _model("enc_ttD")
    topics = random_topics(rng)
    ids = [4, 9, 9]
    out = embed_source(params, ids, [0, 1, 2], topics).values[:, 16:]
    np.testing.assert_allclose(out, topics.word_topics[ids] * topics.doc_topic, atol=1e-15)

    uniform = TopicVectors(topics.word_topics, np.full(TINY_K, 1.0 / TINY_K))
    out = embed_source(params, ids, [0, 1, 2], uniform).values[:, 16:]
    np.testing.assert_allclose(out, topics.word_topics[ids] / TINY_K, atol=1e-15)

    one_hot = np.zeros((TINY_V, TINY_K))
    one_hot[:, 3] = 1.0
    out = embed_source(params, [7], [0], TopicVectors(one_hot, topics.doc_topic)).values[0, 16:]
    assert np.count_nonzero(out) == 1
    assert out[3] == topics.doc_topic[3]


def test_enc_t_uses_word_topics_alone(rng):
    params = _model("enc_t")
    topics = random_topics(rng)
    out = embed_source(params, [4, 5], [0, 1], topics).values[:, 16:]
    np.testing.assert_array_equal(out, topics.word_topics[[4, 5]])


def test_target_prefix_topic_block(rng):
    params = _model("enc_ttD_dec_tD")
    topics = random_topics(rng)
    out = embed_target_prefix(params, [BOS, 8, 9], [0, 1, 2], topics.doc_topic).values
    assert out.shape == (3, 24)
    np.testing.assert_array_equal(out[0, 16:], out[2, 16:])
    np.testing.assert_allclose(out[:, 16:].sum(axis=1), 1.0, atol=1e-12)

    no_dec = _model("enc_t")
    assert embed_target_prefix(no_dec, [BOS, 8], [0, 1], topics.doc_topic).shape == (2, 16)


def test_position_overflow(rng):
    params = _model("plain")
    with pytest.raises(PositionOverflow):
        embed_source(params, [4], [40])
    with pytest.raises(PositionOverflow):
        embed_target_prefix(params, [BOS], [20])


def test_topic_variants_require_topic_width():
    with pytest.raises(ValidationError):
        ModelConfig(variant="enc_t", f_prime=0)
    assert ModelConfig(variant="plain", f_prime=0).embed_width == ModelConfig().f


# ---------- encoder ----------

def test_encoder_single_position(rng):
    params = _model()
    e = embed_source(params, [5], [0], random_topics(rng))
    enc = encode(params, e)
    assert enc.z_u.shape == (1, 24)
    assert enc.e.shape == (1, 24)


@pytest.mark.parametrize("layers,reached", [(1, 1), (2, 2), (3, 3)])
def test_encoder_receptive_field_grows_by_one_per_layer(layers, reached, rng):
    # centre-cropped k=3 convolutions see one position either side per layer
    params = _model("plain", enc_layers=layers)
    e = rng.normal(size=(8, 16))
    base = encode(params, ops.constant(e)).z_u.values
    bumped = e.copy()
    bumped[0] += 1.0
    out = encode(params, ops.constant(bumped)).z_u.values
    assert np.abs(out[reached] - base[reached]).max() > 1e-8
    np.testing.assert_allclose(out[reached + 1:], base[reached + 1:], atol=1e-12, rtol=0)


def test_encoder_without_layers_projects_embeddings(rng):
    params = _model("plain", enc_layers=0)
    e = ops.constant(rng.normal(size=(4, 16)))
    z = encode(params, e).z_u
    expected = ops.linear(ops.linear(e, params.weight("encoder.in_proj"), params.bias("encoder.in_proj")),
                          params.weight("encoder.out_proj"), params.bias("encoder.out_proj"))
    np.testing.assert_allclose(z.values, expected.values, atol=1e-14)


# ---------- attention ----------

def test_attention_rows_are_distributions(rng):
    params = _model()
    topics = random_topics(rng)
    enc = encode_source(params, random_pair(rng, src_len=9), topics)
    logits, maps = decode(params, [BOS, 5, 6, 7], enc, topics.doc_topic)
    assert len(maps) == params.config.dec_layers
    for attn in maps:
        assert attn.shape == (4, 9)
        assert (attn.values >= 0).all()
        np.testing.assert_allclose(attn.values.sum(axis=1), 1.0, atol=1e-9)


def test_attention_with_equal_scores_averages_sources(rng):
    params = _model()
    m = 5
    e = rng.normal(size=(m, 24))
    enc = EncoderOut(z_u=ops.constant(np.zeros((m, 24))), e=ops.constant(e))
    h = ops.constant(rng.normal(size=(3, 16)))
    g = ops.constant(rng.normal(size=(3, 24)))
    context, attn = attend(params, 0, h, g, enc)
    np.testing.assert_allclose(attn.values, 1.0 / m, atol=1e-15)
    expected = ops.linear(ops.constant(np.tile(e.mean(axis=0), (3, 1))),
                          params.weight("decoder.attn0.out"), params.bias("decoder.attn0.out"))
    np.testing.assert_allclose(context.values, expected.values, atol=1e-12)


def test_attention_over_one_source_position_is_exactly_one(rng):
    params = _model()
    enc = EncoderOut(z_u=ops.constant(rng.normal(size=(1, 24)) * 30), e=ops.constant(rng.normal(size=(1, 24))))
    _, attn = attend(params, 1, ops.constant(rng.normal(size=(4, 16))), ops.constant(rng.normal(size=(4, 24))), enc)
    np.testing.assert_array_equal(attn.values, 1.0)


def test_attention_checks_widths(rng):
    params = _model()
    enc = EncoderOut(z_u=ops.constant(np.zeros((2, 24))), e=ops.constant(np.zeros((2, 24))))
    with pytest.raises(ShapeMismatch):
        attend(params, 0, ops.constant(np.zeros((1, 16))), ops.constant(np.zeros((1, 16))), enc)


# ---------- decoder ----------

def test_decode_step_logit_width(rng):
    params = _model()
    topics = random_topics(rng)
    enc = encode_source(params, random_pair(rng), topics)
    assert decode_step(params, [BOS, 4], enc, topics.doc_topic).shape == (TINY_V,)


def test_decoder_is_causal_under_future_mutation(rng):
    params = _model()
    topics = random_topics(rng)
    enc = encode_source(params, random_pair(rng, src_len=10), topics)
    for _ in range(100):
        n = int(rng.integers(2, 12))
        prefix = [BOS] + rng.integers(4, TINY_V, size=n - 1).tolist()
        cut = int(rng.integers(1, n))
        mutated = prefix[:cut] + rng.integers(4, TINY_V, size=n - cut).tolist()
        a, _ = decode(params, prefix, enc, topics.doc_topic)
        b, _ = decode(params, mutated, enc, topics.doc_topic)
        np.testing.assert_array_equal(a.values[:cut], b.values[:cut])


def test_appending_a_token_leaves_earlier_steps(rng):
    params = _model()
    topics = random_topics(rng)
    enc = encode_source(params, random_pair(rng), topics)
    prefix = [BOS, 9, 14, 22]
    short, _ = decode(params, prefix, enc, topics.doc_topic)
    longer, _ = decode(params, prefix + [30], enc, topics.doc_topic)
    np.testing.assert_allclose(longer.values[:4], short.values, atol=1e-12, rtol=0)


def test_untrained_model_is_near_uniform(rng):
    params = _model()
    topics = random_topics(rng)
    enc = encode_source(params, random_pair(rng), topics)
    probs = softmax_values(decode_step(params, [BOS, 5, 6], enc, topics.doc_topic))
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    entropy = -(probs * np.log(probs)).sum()
    assert entropy == pytest.approx(math.log(TINY_V), rel=0.05)


# ---------- loss ----------

def test_loss_of_eos_only_target(rng):
    params = _model()
    topics = random_topics(rng)
    pair = EncodedPair([4, 5, 6], [EOS])
    loss = forward_loss(params, pair, topics)
    enc = encode_source(params, pair, topics)
    expected = -log_softmax_values(decode_step(params, [BOS], enc, topics.doc_topic))[EOS]
    assert loss.item() == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("variant", VARIANTS)
def test_loss_is_finite_and_positive_for_every_variant(variant, rng):
    params = _model(variant)
    topics = None if variant == "plain" else random_topics(rng)
    loss = forward_loss(params, random_pair(rng), topics).item()
    assert math.isfinite(loss) and loss > 0


def test_topic_variant_without_topics_is_rejected(rng):
    with pytest.raises(ShapeMismatch):
        forward_loss(_model("enc_ttD"), random_pair(rng), None)


@pytest.mark.slow
def test_end_to_end_gradients_match_finite_differences(rng):
    params = _model()
    topics = random_topics(rng)
    pair = random_pair(rng, src_len=6, tgt_len=4)
    tensors = [t for _, t in params]
    results = check_gradients(lambda: forward_loss(params, pair, topics), tensors, h=1e-5,
                              samples_per_tensor=6, rng=np.random.default_rng(0))
    assert len(results) >= 200
    assert max_relative_error(results) < 1e-3


def test_gradients_with_layer_norm_and_scaled_residuals(rng):
    params = _model("enc_t_dec_tD", layer_norm=True, scale_residual=True)
    topics = random_topics(rng)
    pair = random_pair(rng, src_len=5, tgt_len=3)
    tensors = [params[name] for name in ("encoder.ln0.gain", "decoder.ln1.bias", "decoder.conv1.v", "embed.tokens")]
    results = check_gradients(lambda: forward_loss(params, pair, topics), tensors,
                              samples_per_tensor=8, rng=np.random.default_rng(1))
    assert max_relative_error(results) < 1e-3


# ---------- topic-free reference ----------

def _w(p, name, axis):
    v, g = p[f"{name}.v"], p[f"{name}.g"]
    norm = np.sqrt((v ** 2).sum(axis=axis, keepdims=True))
    return np.expand_dims(g, axis) * v / norm


def _lin(p, name, x):
    return x @ _w(p, name, 0) + p[f"{name}.b"]


def _conv(p, name, x, causal, k):
    W, b = _w(p, name, 1), p[f"{name}.b"]
    m, d = x.shape
    left = k - 1 if causal else k - 1 - (k - 1) // 2
    out = np.zeros((m, W.shape[0]))
    for i in range(m):
        window = np.zeros(k * d)
        for j in range(k):
            src = i - left + j
            if 0 <= src < m:
                window[j * d:(j + 1) * d] = x[src]
        out[i] = W @ window + b
    half = out.shape[1] // 2
    return out[:, :half] / (1.0 + np.exp(-out[:, half:]))


def _reference_plain_loss(params, pair):
    p = {name: t.values for name, t in params}
    cfg = params.config
    e = p["embed.tokens"][pair.source_ids] + p["embed.src_positions"][np.arange(len(pair.source_ids))]
    h = _lin(p, "encoder.in_proj", e)
    for l in range(cfg.enc_layers):
        h = _conv(p, f"encoder.conv{l}", h, False, cfg.k) + h
    z = _lin(p, "encoder.out_proj", h)

    prefix = [BOS] + pair.target_ids[:-1]
    g = p["embed.tokens"][prefix] + p["embed.tgt_positions"][np.arange(len(prefix))]
    h = _lin(p, "decoder.in_proj", g)
    for l in range(cfg.dec_layers):
        out = _conv(p, f"decoder.conv{l}", h, True, cfg.k)
        scores = (_lin(p, f"decoder.attn{l}.query", out) + g) @ z.T
        attn = np.exp(scores - scores.max(axis=1, keepdims=True))
        attn /= attn.sum(axis=1, keepdims=True)
        h = out + _lin(p, f"decoder.attn{l}.out", attn @ (z + e)) + h
    logits = _lin(p, "decoder.out", h)
    logp = logits - logits.max(axis=1, keepdims=True)
    logp -= np.log(np.exp(logp).sum(axis=1, keepdims=True))
    return -logp[np.arange(len(prefix)), pair.target_ids].mean()


def test_plain_variant_matches_topic_free_reference(rng):
    params = _model("plain", f_prime=0, seed=3)
    for _ in range(3):
        pair = random_pair(rng, src_len=int(rng.integers(1, 12)), tgt_len=int(rng.integers(1, 8)))
        assert forward_loss(params, pair).item() == pytest.approx(_reference_plain_loss(params, pair), abs=1e-12)
