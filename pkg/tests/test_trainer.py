import csv
import math

import numpy as np
import pytest

from app.config import TrainerConfig
from app.corpus.documents import EncodedPair
from app.corpus.encode import encode_pair
from app.corpus.vocab import EOS, PAD, build_vocab
from app.decode.beam import beam_search
from app.diffcore.tensor import Tensor
from app.errors import ConfigError, EmptyTargets, EmptyValidationSet
from app.model.params import ModelParams
from app.store.artifacts import load_checkpoint
from app.topics.lda import CorpusTopics, corpus_topics, document_bag, train_lda
from app.train.optimizer import global_norm, nesterov_step, renorm_grads
from app.train.schedule import anneal_and_stop
from app.train.trainer import (
    BEST_CHECKPOINT,
    TRAINING_LOG,
    TrainState,
    batch_loss,
    make_batches,
    run_epoch,
    train,
    validation_perplexity,
)
from tests.conftest import random_pair, random_topics, tiny_model_config


def _scalar_state(theta, lr=0.01, momentum=0.99):
    params = ModelParams(tiny_model_config(), {"theta": Tensor(np.array([theta]), requires_grad=True)})
    state = TrainState.fresh(params)
    state.lr, state.momentum = lr, momentum
    return state


def _shared_topics(rng, ids):
    base = random_topics(rng)
    return CorpusTopics(base.word_topics, {i: base.doc_topic for i in ids})


# ---------- gradient renormalization ----------

def test_renorm_scales_down_large_gradients():
    out = renorm_grads({"w": np.array([0.3, 0.4])}, threshold=0.1)
    np.testing.assert_allclose(out["w"], [0.06, 0.08], atol=1e-15)


def test_renorm_leaves_small_gradients():
    grads = {"w": np.array([0.03, 0.04])}
    np.testing.assert_array_equal(renorm_grads(grads)["w"], grads["w"])


def test_renorm_bounds_global_norm(rng):
    for _ in range(20):
        grads = {f"g{i}": rng.normal(scale=rng.uniform(0.01, 10), size=rng.integers(1, 30)) for i in range(4)}
        assert global_norm(renorm_grads(grads, 0.1)) <= 0.1 + 1e-12


# ---------- Nesterov ----------

def test_nesterov_fixed_point():
    state = _scalar_state(0.7)
    nesterov_step(state, {"theta": np.zeros(1)})
    assert state.params["theta"].values[0] == 0.7
    assert state.velocity["theta"][0] == 0.0


def test_first_nesterov_step_is_scaled_sgd():
    state = _scalar_state(1.0, lr=0.05, momentum=0.9)
    nesterov_step(state, {"theta": np.array([2.0])})
    assert state.params["theta"].values[0] == pytest.approx(1.0 - (1 + 0.9) * 0.05 * 2.0)


def test_nesterov_minimizes_quadratic_bowl():
    state = _scalar_state(1.0, lr=0.01, momentum=0.99)
    for _ in range(500):
        nesterov_step(state, {"theta": 2.0 * state.params["theta"].values})
    assert abs(state.params["theta"].values[0]) < 1e-2


def test_fresh_state_velocity_mirrors_params():
    params = ModelParams.initialize(tiny_model_config(), seed=0)
    state = TrainState.fresh(params, TrainerConfig())
    assert set(state.velocity) == {name for name, _ in params}
    for name, tensor in params:
        assert state.velocity[name].shape == tensor.shape
    assert state.lr == 0.10 and state.momentum == 0.99


# ---------- annealing ----------

def _trace(ppls, config=TrainerConfig()):
    state = _scalar_state(0.0, lr=config.lr)
    lrs = []
    for ppl in ppls:
        lrs.append(state.lr)
        state.epoch += 1
        if anneal_and_stop(state, ppl, config) == "stop":
            return lrs, True
    return lrs, False


def test_learning_rate_holds_while_improving():
    lrs, stopped = _trace([50, 40, 30, 20, 10])
    assert lrs == [0.10] * 5
    assert not stopped


def test_learning_rate_anneals_after_plateau():
    lrs, stopped = _trace([50, 40, 40, 39, 38, 37, 36, 35])
    assert stopped
    assert lrs == pytest.approx([0.10, 0.10, 0.10, 0.01, 0.001, 1e-4])


def test_learning_rate_after_k_annealed_epochs():
    lrs, _ = _trace([10, 11] + [9] * 2)
    assert lrs == pytest.approx([0.10, 0.10, 0.01, 0.001])


def test_annealing_starts_at_epoch_cap():
    config = TrainerConfig(anneal_after_epochs=3)
    lrs, stopped = _trace([9, 8, 7, 6, 5, 4, 3], config)
    assert lrs == pytest.approx([0.10, 0.10, 0.10, 0.01, 0.001, 1e-4])
    assert stopped


# ---------- losses ----------

def test_uniform_model_perplexity_equals_vocab_size(rng):
    params = ModelParams.initialize(tiny_model_config("plain"), seed=0)
    params["decoder.out.g"].values[:] = 0.0
    val = [random_pair(rng) for _ in range(4)]
    assert validation_perplexity(params, val) == pytest.approx(50.0, rel=1e-9)


def test_perplexity_is_at_least_one(rng):
    params = ModelParams.initialize(tiny_model_config("plain"), seed=1)
    assert validation_perplexity(params, [random_pair(rng) for _ in range(3)]) >= 1.0


def test_empty_validation_set():
    params = ModelParams.initialize(tiny_model_config("plain"), seed=0)
    with pytest.raises(EmptyValidationSet):
        validation_perplexity(params, [])


def test_all_padding_batch_is_rejected():
    params = ModelParams.initialize(tiny_model_config("plain"), seed=0)
    with pytest.raises(EmptyTargets):
        batch_loss(params, [EncodedPair([4, 5], [PAD, PAD]), EncodedPair([6], [PAD])])


def test_trailing_padding_does_not_change_batch_loss(rng):
    params = ModelParams.initialize(tiny_model_config(), seed=2)
    pairs = [random_pair(rng, tgt_len=n) for n in (2, 4, 6)]
    for i, p in enumerate(pairs):
        p.doc_id = f"d{i}"
    padded = [EncodedPair(p.source_ids, p.target_ids + [PAD] * 4, doc_id=p.doc_id) for p in pairs]
    topics = _shared_topics(rng, [p.doc_id for p in pairs])
    a = batch_loss(params, pairs, topics).item()
    b = batch_loss(params, padded, topics).item()
    assert a == pytest.approx(b, abs=1e-12)

def test_make_batches_partitions_and_sorts(rng):
    pairs = [EncodedPair([4] * n, [EOS], doc_id=str(i)) for i, n in enumerate(rng.integers(1, 30, size=37))]
    batches = make_batches(pairs, batch_size=5, sort_window=10, rng=np.random.default_rng(0))
    seen = sorted(p.doc_id for b in batches for p in b)
    assert seen == sorted(p.doc_id for p in pairs)
    assert all(1 <= len(b) <= 5 for b in batches)
    for b in batches:
        lengths = [len(p.source_ids) for p in b]
        assert lengths == sorted(lengths)


# ---------- end to end ----------

@pytest.fixture(scope="module")
def toy_setup(toy_docs):
    docs = toy_docs[:50]
    vocab = build_vocab(docs)
    pairs = [encode_pair(d, vocab, max_source=40, max_target=20) for d in docs]
    lda = train_lda([document_bag(p.source_ids) for p in pairs], K=4, iters=10, seed=0, vocab_size=len(vocab))
    topics = corpus_topics(lda, [(p.doc_id, p.source_ids) for p in pairs], iters=10, seed=0)
    config = tiny_model_config(vocab_size=len(vocab), f=32, d=32, f_prime=4)
    return vocab, pairs, topics, config


def test_training_loss_decreases_and_is_reproducible(toy_setup, tmp_path):
    _, pairs, topics, config = toy_setup
    trainer_config = TrainerConfig(batch_size=25, max_epochs=5)
    first = train(config, trainer_config, pairs, pairs[:10], topics, seed=4, checkpoint_dir=tmp_path / "a")
    losses = [loss for _, loss, _, _ in first.history]
    assert len(losses) == 5
    assert all(b < a for a, b in zip(losses, losses[1:]))

    second = train(config, trainer_config, pairs, pairs[:10], topics, seed=4)
    assert second.history == first.history

    out = tmp_path / "a"
    assert sorted(p.name for p in out.glob("ckpt-epoch*")) == [f"ckpt-epoch{i}" for i in range(1, 6)]
    assert (out / BEST_CHECKPOINT).exists()
    with open(out / TRAINING_LOG, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["epoch"]) for r in rows] == [1, 2, 3, 4, 5]
    assert float(rows[0]["lr"]) == pytest.approx(0.10)

    restored = load_checkpoint(out / "ckpt-epoch5")
    for name, tensor in first.params:
        np.testing.assert_array_equal(restored[name].values, tensor.values)


def test_train_rejects_missing_validation(toy_setup):
    _, pairs, topics, config = toy_setup
    with pytest.raises(EmptyValidationSet):
        train(config, TrainerConfig(max_epochs=1), pairs, [], topics)


def test_topic_variant_without_topics_is_a_config_error(toy_setup):
    _, pairs, _, config = toy_setup
    assert config.variant != "plain"
    with pytest.raises(ConfigError):
        train(config, TrainerConfig(max_epochs=1), pairs[:5], pairs[5:10], None)


@pytest.mark.slow
def test_toy_model_memorizes_fifty_pairs(toy_setup):
    _, pairs, topics, config = toy_setup
    trainer_config = TrainerConfig(batch_size=5)
    state = TrainState.fresh(ModelParams.initialize(config, seed=0), trainer_config)
    ppl = math.inf
    for _ in range(20):
        for _ in range(10):
            run_epoch(state, pairs, topics, trainer_config, seed=0)
        ppl = validation_perplexity(state.params, pairs, topics)
        if ppl <= 1.2:
            break
    assert ppl <= 1.2

    exact = 0
    for pair in pairs:
        best = beam_search(pair, topics.for_doc(pair.doc_id), state.params, beam=10, max_len=20)[0]
        exact += best.generated == pair.target_ids
    assert exact >= 45
