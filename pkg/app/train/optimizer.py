"""Gradient renormalization and the Nesterov momentum update."""
from __future__ import annotations

import math
from typing import Dict, Mapping

import numpy as np

Grads = Dict[str, np.ndarray]

DEFAULT_CLIP_NORM = 0.1
DEFAULT_MOMENTUM = 0.99


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def renorm_grads(grads: Mapping[str, np.ndarray], threshold: float = DEFAULT_CLIP_NORM) -> Grads:
    """Rescale all gradients together so their global L2 norm is at most ``threshold``."""
    norm = global_norm(grads)
    if norm <= threshold:
        return dict(grads)
    factor = threshold / norm
    return {name: g * factor for name, g in grads.items()}


def nesterov_step(state, grads: Mapping[str, np.ndarray]):
    """
    In-place Nesterov update of ``state.params`` and ``state.velocity``:

        v <- mu v - lr g
        theta <- theta + mu v - lr g

    Parameters without a gradient entry are left alone.
    """
    mu, lr = state.momentum, state.lr
    for name, tensor in state.params:
        grad = grads.get(name)
        if grad is None:
            continue
        v = state.velocity[name]
        v *= mu
        v -= lr * grad
        tensor.values += mu * v - lr * grad
    return state
