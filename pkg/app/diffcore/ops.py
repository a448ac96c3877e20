"""Differentiable operators used by the convolutional seq2seq model."""
from __future__ import annotations

from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.diffcore.tensor import Tensor, record
from app.errors import EmptyTargets, IndexOutOfVocab, OddWidth, ShapeMismatch

PadMode = Literal["symmetric", "causal"]


def constant(values) -> Tensor:
    return Tensor(values, requires_grad=False)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatch(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


# ---------- elementwise ----------

def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "add")

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record("add", a.values + b.values, (a, b), _backward)


def scale(a: Tensor, factor: float) -> Tensor:
    return record("scale", a.values * factor, (a,), lambda g: (g * factor,))


def reduce_sum(a: Tensor) -> Tensor:
    return record("sum", np.asarray(a.values.sum()), (a,), lambda g: (np.broadcast_to(g, a.shape),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = list(tensors)
    values = np.concatenate([t.values for t in tensors], axis=axis)
    bounds = np.cumsum([t.values.shape[axis] for t in tensors])[:-1]

    def _backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return record("concat", values, tensors, _backward)


# ---------- linear algebra ----------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.values.ndim != 2 or b.values.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")

    def _backward(g):
        return g @ b.values.T, a.values.T @ g

    return record("matmul", a.values @ b.values, (a, b), _backward)


def linear(x: Tensor, W: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """Affine map ``x @ W + b`` over the last axis of ``x``."""
    if W.values.ndim != 2 or x.shape[-1] != W.shape[0]:
        raise ShapeMismatch(f"linear: input {x.shape} does not match weight {W.shape}")
    if b is not None and b.shape != (W.shape[1],):
        raise ShapeMismatch(f"linear: bias {b.shape} does not match weight {W.shape}")

    x2 = x.values.reshape(-1, W.shape[0])
    out = x2 @ W.values
    if b is not None:
        out = out + b.values
    out = out.reshape(x.shape[:-1] + (W.shape[1],))

    def _backward(g):
        g2 = g.reshape(-1, W.shape[1])
        gx = (g2 @ W.values.T).reshape(x.shape)
        gW = x2.T @ g2
        if b is None:
            return gx, gW
        return gx, gW, g2.sum(axis=0)

    parents = (x, W) if b is None else (x, W, b)
    return record("linear", out, parents, _backward)


def embedding(table: Tensor, ids) -> Tensor:
    """Row lookup ``table[ids]``; lookup tables are never weight-normalized."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexOutOfVocab(f"embedding ids outside [0, {table.shape[0]})")

    def _backward(g):
        grad = np.zeros_like(table.values)
        np.add.at(grad, ids, g)
        return (grad,)

    return record("embedding", table.values[ids], (table,), _backward)


def weight_norm(v: Tensor, g: Tensor, axis: int) -> Tensor:
    """``w = g * v / ||v||`` with the norm taken over ``axis`` (the fan-in axis)."""
    if v.values.ndim != 2 or g.shape != (v.shape[1 - axis],):
        raise ShapeMismatch(f"weight_norm: direction {v.shape} vs gain {g.shape} on axis {axis}")
    norm = np.sqrt((v.values ** 2).sum(axis=axis, keepdims=True))
    gain = np.expand_dims(g.values, axis)
    unit = v.values / norm

    def _backward(dw):
        s = (dw * unit).sum(axis=axis, keepdims=True)
        return gain / norm * (dw - unit * s), s.squeeze(axis)

    return record("weight_norm", gain * unit, (v, g), _backward)


# ---------- convolution ----------

def conv1d(X: Tensor, W: Tensor, b: Tensor, pad_mode: PadMode = "symmetric") -> Tensor:
    """
    1-D convolution over rows of ``X`` (m x d) with ``W`` of shape (c, k*d).

    symmetric: k-1 zero rows on both sides, m+k-1 raw outputs centre-cropped to m
    (floor((k-1)/2) dropped on the left). causal: k-1 zero rows on the left only,
    so output row i only sees input rows <= i.
    """
    if X.values.ndim != 2 or W.values.ndim != 2:
        raise ShapeMismatch(f"conv1d: expected 2-D input and weight, got {X.shape}, {W.shape}")
    m, d = X.shape
    c = W.shape[0]
    if m < 1 or W.shape[1] % d != 0:
        raise ShapeMismatch(f"conv1d: weight {W.shape} incompatible with input width {d}")
    k = W.shape[1] // d
    if b.shape != (c,):
        raise ShapeMismatch(f"conv1d: bias {b.shape} does not match {c} output channels")

    if pad_mode == "symmetric":
        pad_left, pad_right, crop = k - 1, k - 1, (k - 1) // 2
    elif pad_mode == "causal":
        pad_left, pad_right, crop = k - 1, 0, 0
    else:
        raise ValueError(f"unknown pad_mode {pad_mode!r}")

    padded = np.zeros((m + pad_left + pad_right, d))
    padded[pad_left:pad_left + m] = X.values
    # windows[i] = rows i..i+k-1 concatenated, shape (n_raw, k*d)
    windows = sliding_window_view(padded, k, axis=0).transpose(0, 2, 1)[crop:crop + m]
    unfolded = windows.reshape(m, k * d)
    out = unfolded @ W.values.T + b.values

    def _backward(g):
        g_unfolded = (g @ W.values).reshape(m, k, d)
        g_padded = np.zeros_like(padded)
        for j in range(k):
            g_padded[crop + j:crop + j + m] += g_unfolded[:, j, :]
        return g_padded[pad_left:pad_left + m], g.T @ unfolded, g.sum(axis=0)

    return record("conv1d", out, (X, W, b), _backward)


# ---------- nonlinearities ----------

def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def glu(Y: Tensor) -> Tensor:
    """Gated linear unit: split the last axis into halves A, B and return A * sigmoid(B)."""
    width = Y.shape[-1]
    if width % 2:
        raise OddWidth(f"glu needs an even last dimension, got {width}")
    half = width // 2
    A, B = Y.values[..., :half], Y.values[..., half:]
    gate = _sigmoid(B)

    def _backward(g):
        return (np.concatenate([g * gate, g * A * gate * (1.0 - gate)], axis=-1),)

    return record("glu", A * gate, (Y,), _backward)


def softmax_values(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


def log_softmax_values(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(x: Tensor) -> Tensor:
    probs = softmax_values(x.values)

    def _backward(g):
        return (probs * (g - (g * probs).sum(axis=-1, keepdims=True)),)

    return record("softmax", probs, (x,), _backward)


def softmax_xent(
    logits: Tensor,
    targets: Sequence[int],
    pad_mask: Optional[Sequence[bool]] = None,
    reduction: Literal["mean", "sum"] = "mean",
) -> Tuple[Tensor, Tensor]:
    """
    Cross-entropy of row-wise softmax against integer targets.
    ``pad_mask[i]`` True excludes row i. Returns (loss, probs); "mean" divides by
    the number of non-masked rows.
    """
    if logits.values.ndim != 2:
        raise ShapeMismatch(f"softmax_xent expects (n, T) logits, got {logits.shape}")
    n, T = logits.shape
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (n,):
        raise ShapeMismatch(f"softmax_xent: {len(targets)} targets for {n} rows")
    if n and (targets.min() < 0 or targets.max() >= T):
        raise IndexOutOfVocab(f"targets outside [0, {T})")
    valid = np.ones(n, dtype=bool) if pad_mask is None else ~np.asarray(pad_mask, dtype=bool)
    count = int(valid.sum())
    if count == 0:
        raise EmptyTargets("every target position is padding")

    logp = log_softmax_values(logits.values)
    probs = np.exp(logp)
    rows = np.arange(n)
    nll = -logp[rows, targets]
    denom = count if reduction == "mean" else 1
    loss = nll[valid].sum() / denom

    def _backward(g):
        grad = probs.copy()
        grad[rows, targets] -= 1.0
        grad *= valid[:, None]
        return (grad * (g / denom),)

    return record("softmax_xent", np.asarray(loss), (logits,), _backward), constant(probs)


def dropout(x: Tensor, p: float, training: bool, rng: Optional[np.random.Generator] = None) -> Tensor:
    """Inverted dropout; identity when not training or p == 0."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    rng = rng if rng is not None else np.random.default_rng()
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return record("dropout", x.values * mask, (x,), lambda g: (g * mask,))


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    mu = x.values.mean(axis=-1, keepdims=True)
    sigma = np.sqrt(x.values.var(axis=-1, keepdims=True) + eps)
    xhat = (x.values - mu) / sigma

    def _backward(g):
        g_hat = g * gain.values
        gx = (g_hat - g_hat.mean(axis=-1, keepdims=True)
              - xhat * (g_hat * xhat).mean(axis=-1, keepdims=True)) / sigma
        g2, xh2 = g.reshape(-1, x.shape[-1]), xhat.reshape(-1, x.shape[-1])
        return gx, (g2 * xh2).sum(axis=0), g2.sum(axis=0)

    return record("layer_norm", xhat * gain.values + bias.values, (x, gain, bias), _backward)


def transpose(a: Tensor) -> Tensor:
    if a.values.ndim != 2:
        raise ShapeMismatch(f"transpose expects a 2-D tensor, got {a.shape}")
    return record("transpose", a.values.T, (a,), lambda g: (g.T,))
