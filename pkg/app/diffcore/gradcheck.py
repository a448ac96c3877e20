"""Central finite-difference checks against tape gradients."""
from __future__ import annotations

from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np

from app.diffcore.tensor import Tape, Tensor, backward


def relative_error(analytic: float, numeric: float, floor: float = 1e-6) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Iterable[Tensor],
    h: float = 1e-5,
    samples_per_tensor: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> List[Tuple[str, int, float, float]]:
    """
    Compare analytic gradients of ``loss_fn()`` with central differences.

    ``loss_fn`` must be deterministic and return a scalar tensor. Returns
    (tensor name, flat index, analytic, numeric) per checked coordinate.
    """
    tensors = list(tensors)
    for t in tensors:
        t.zero_grad()
    with Tape():
        loss = loss_fn()
        backward(loss)
    analytic = {id(t): (np.zeros_like(t.values) if t.grad is None else t.grad.copy()) for t in tensors}

    rng = rng if rng is not None else np.random.default_rng(0)
    results = []
    for t in tensors:
        flat = t.values.reshape(-1)
        if samples_per_tensor is None or samples_per_tensor >= flat.size:
            indices = np.arange(flat.size)
        else:
            indices = rng.choice(flat.size, size=samples_per_tensor, replace=False)
        for idx in indices:
            original = flat[idx]
            flat[idx] = original + h
            plus = loss_fn().item()
            flat[idx] = original - h
            minus = loss_fn().item()
            flat[idx] = original
            numeric = (plus - minus) / (2.0 * h)
            results.append((t.name or "", int(idx), float(analytic[id(t)].reshape(-1)[idx]), numeric))
    return results


def max_relative_error(results: Iterable[Tuple[str, int, float, float]], floor: float = 1e-6) -> float:
    return max((relative_error(a, n, floor) for _, _, a, n in results), default=0.0)
