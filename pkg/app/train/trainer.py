"""
Epoch loop for the convolutional summarizer.

Per batch: summed token NLL over all pairs / non-PAD target count, one tape,
backward, global gradient renormalization, Nesterov step. After each epoch:
validation perplexity, learning-rate annealing, checkpoint and log row.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from app.config import TrainerConfig
from app.corpus.documents import EncodedPair
from app.corpus.vocab import PAD
from app.diffcore import ops
from app.diffcore.tensor import Tape, Tensor, backward
from app.errors import ConfigError, EmptyTargets, EmptyValidationSet
from app.model.config import ModelConfig
from app.model.convs2s import EVAL, ForwardContext, forward_nll
from app.model.params import ModelParams
from app.store.artifacts import append_training_log, save_checkpoint
from app.topics.lda import CorpusTopics, TopicVectors
from app.train.optimizer import nesterov_step, renorm_grads
from app.train.schedule import anneal_and_stop

logger = logging.getLogger(__name__)

TRAINING_LOG = "training_log.csv"
BEST_CHECKPOINT = "ckpt-best"


@dataclass
class TrainState:
    params: ModelParams
    velocity: Dict[str, np.ndarray]
    lr: float = 0.10
    momentum: float = 0.99
    epoch: int = 0
    best_val_ppl: float = math.inf
    annealing: bool = False
    history: List[Tuple[int, float, float, float]] = field(default_factory=list)

    @classmethod
    def fresh(cls, params: ModelParams, config: TrainerConfig = TrainerConfig()) -> "TrainState":
        velocity = {name: np.zeros_like(t.values) for name, t in params}
        return cls(params=params, velocity=velocity, lr=config.lr, momentum=config.momentum)


def checkpoint_name(epoch: int) -> str:
    return f"ckpt-epoch{epoch}"


def _topics_for(topics: Optional[CorpusTopics], pair: EncodedPair) -> Optional[TopicVectors]:
    if topics is None:
        return None
    return topics.for_doc(pair.doc_id)


def target_count(pair: EncodedPair) -> int:
    return sum(1 for t in pair.target_ids if t != PAD)


def batch_loss(
    params: ModelParams,
    batch: Sequence[EncodedPair],
    topics: Optional[CorpusTopics] = None,
    ctx: ForwardContext = EVAL,
) -> Tensor:
    """Token-level mean NLL of a batch: NLL summed over every pair / non-PAD targets."""
    live = [pair for pair in batch if target_count(pair) > 0]
    if not live:
        raise EmptyTargets("batch has no non-padding target tokens")
    total, count = None, 0
    for pair in live:
        nll, n = forward_nll(params, pair, _topics_for(topics, pair), ctx)
        total = nll if total is None else ops.add(total, nll)
        count += n
    return ops.scale(total, 1.0 / count)


def validation_perplexity(
    params: ModelParams,
    val_set: Sequence[EncodedPair],
    topics: Optional[CorpusTopics] = None,
) -> float:
    """exp of the mean NLL over every non-PAD validation target token."""
    if not val_set:
        raise EmptyValidationSet("validation set is empty")
    total, count = 0.0, 0
    for pair in val_set:
        if target_count(pair) == 0:
            continue
        nll, n = forward_nll(params, pair, _topics_for(topics, pair))
        total += nll.item()
        count += n
    if count == 0:
        raise EmptyValidationSet("validation set has no target tokens")
    return math.exp(total / count)


def make_batches(
    pairs: Sequence[EncodedPair],
    batch_size: int,
    sort_window: int,
    rng: np.random.Generator,
) -> List[List[EncodedPair]]:
    """Shuffle, sort by source length inside windows of ``sort_window``, cut into
    batches, then shuffle the batch order."""
    order = rng.permutation(len(pairs))
    shuffled = [pairs[i] for i in order]
    batches: List[List[EncodedPair]] = []
    for start in range(0, len(shuffled), sort_window):
        window = sorted(shuffled[start:start + sort_window], key=lambda p: len(p.source_ids))
        batches += [window[i:i + batch_size] for i in range(0, len(window), batch_size)]
    return [batches[i] for i in rng.permutation(len(batches))]


def train_step(
    state: TrainState,
    batch: Sequence[EncodedPair],
    topics: Optional[CorpusTopics],
    ctx: ForwardContext,
    clip_norm: float,
) -> float:
    state.params.zero_grad()
    with Tape():
        loss = batch_loss(state.params, batch, topics, ctx)
        backward(loss)
    grads = {name: t.grad for name, t in state.params if t.grad is not None}
    nesterov_step(state, renorm_grads(grads, clip_norm))
    return loss.item()


def run_epoch(
    state: TrainState,
    pairs: Sequence[EncodedPair],
    topics: Optional[CorpusTopics],
    config: TrainerConfig,
    seed: int = 0,
    progress: bool = False,
) -> float:
    """One pass over ``pairs``; returns the mean batch loss."""
    epoch = state.epoch + 1
    batches = make_batches(pairs, config.batch_size, config.sort_window, np.random.default_rng([seed, 0, epoch]))
    ctx = ForwardContext(training=True, rng=np.random.default_rng([seed, 1, epoch]))
    losses = []
    for batch in tqdm(batches, desc=f"epoch {epoch}", disable=not progress):
        losses.append(train_step(state, batch, topics, ctx, config.clip_norm))
    state.epoch = epoch
    return float(np.mean(losses))


def train(
    model_config: ModelConfig,
    trainer_config: TrainerConfig,
    train_pairs: Sequence[EncodedPair],
    val_pairs: Sequence[EncodedPair],
    topics: Optional[CorpusTopics] = None,
    seed: int = 0,
    checkpoint_dir: Optional[Path] = None,
    params: Optional[ModelParams] = None,
    progress: bool = False,
) -> TrainState:
    """
    Train until the annealed learning rate drops below ``min_lr`` (or
    ``max_epochs`` is reached). With ``checkpoint_dir`` set, every epoch writes
    ``ckpt-epochN``, improvements refresh ``ckpt-best``, and a CSV row is appended
    to ``training_log.csv``.
    """
    if not train_pairs:
        raise EmptyTargets("no training pairs")
    if not val_pairs:
        raise EmptyValidationSet("validation set is empty")
    if model_config.variant != "plain" and topics is None:
        raise ConfigError(f"variant {model_config.variant} needs document topics")

    params = params if params is not None else ModelParams.initialize(model_config, seed)
    state = TrainState.fresh(params, trainer_config)
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
        (checkpoint_dir / TRAINING_LOG).unlink(missing_ok=True)

    logger.info(
        "Training %s: %d parameters, %d train / %d val pairs",
        model_config.variant, params.num_parameters(), len(train_pairs), len(val_pairs),
    )
    while True:
        lr = state.lr
        train_loss = run_epoch(state, train_pairs, topics, trainer_config, seed, progress)
        val_ppl = validation_perplexity(state.params, val_pairs, topics)
        improved = val_ppl < state.best_val_ppl
        state.history.append((state.epoch, train_loss, val_ppl, lr))
        logger.info("epoch %d: loss=%.4f val_ppl=%.3f lr=%.3g", state.epoch, train_loss, val_ppl, lr)

        if checkpoint_dir is not None:
            save_checkpoint(state.params, checkpoint_dir / checkpoint_name(state.epoch))
            if improved:
                save_checkpoint(state.params, checkpoint_dir / BEST_CHECKPOINT)
            append_training_log(
                checkpoint_dir / TRAINING_LOG,
                {"epoch": state.epoch, "train_loss": train_loss, "val_ppl": val_ppl, "lr": lr},
            )

        decision = anneal_and_stop(state, val_ppl, trainer_config)
        if decision == "stop":
            logger.info("Stopping: learning rate %.3g below %.3g", state.lr, trainer_config.min_lr)
            break
        if trainer_config.max_epochs is not None and state.epoch >= trainer_config.max_epochs:
            logger.info("Stopping: reached max_epochs=%d", trainer_config.max_epochs)
            break
    return state
