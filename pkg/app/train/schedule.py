from __future__ import annotations

import logging
from typing import Literal

from app.config import TrainerConfig

logger = logging.getLogger(__name__)

Decision = Literal["continue", "stop"]

ANNEAL_FACTOR = 0.1
# 0.1 * 0.1 * 0.1 * 0.1 lands a hair above 1e-4; compare with a relative slack
_LR_SLACK = 1e-9


def anneal_and_stop(state, new_val_ppl: float, config: TrainerConfig = TrainerConfig()) -> Decision:
    """
    Update ``state`` after an epoch that ended with validation perplexity ``new_val_ppl``.

    The first epoch that fails to beat ``best_val_ppl`` (or reaches
    ``anneal_after_epochs``) switches annealing on; from then on the learning rate
    drops by 10x after every epoch. Training stops once lr falls below ``min_lr``.
    """
    if new_val_ppl < state.best_val_ppl:
        state.best_val_ppl = new_val_ppl
    elif not state.annealing:
        logger.info("Validation perplexity stopped improving at epoch %d (%.4f)", state.epoch, new_val_ppl)
        state.annealing = True

    if state.epoch >= config.anneal_after_epochs and not state.annealing:
        logger.info("Epoch cap %d reached; annealing starts", config.anneal_after_epochs)
        state.annealing = True

    if state.annealing:
        state.lr *= ANNEAL_FACTOR
        logger.info("Learning rate -> %.3g", state.lr)

    if state.lr < config.min_lr * (1.0 - _LR_SLACK):
        return "stop"
    return "continue"
