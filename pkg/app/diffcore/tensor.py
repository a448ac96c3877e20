"""Dense float64 tensors with a reverse-mode tape.

Ops record a node on the active :class:`Tape` only when a tape is open and at
least one input requires a gradient. Without an open tape every op is a plain
numpy computation, which is how inference runs.
"""
from __future__ import annotations

from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.errors import DetachedTensor, ShapeMismatch

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("active_tape", default=None)


class Tensor:
    __slots__ = ("values", "requires_grad", "grad", "name", "_node")

    def __init__(self, values, requires_grad: bool = False, name: Optional[str] = None):
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._node: Optional[Node] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.values.shape)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeMismatch(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


@dataclass
class Node:
    op: str
    output: Tensor
    parents: Tuple[Tensor, ...]
    backward: BackwardFn
    tape: "Tape"
    index: int


class Tape:
    """Ordered record of differentiable ops; one tape per training step."""

    def __init__(self) -> None:
        self.nodes: List[Node] = []
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    @staticmethod
    def current() -> Optional["Tape"]:
        return _ACTIVE_TAPE.get()

    def record(self, op: str, output: Tensor, parents: Tuple[Tensor, ...], backward: BackwardFn) -> None:
        node = Node(op, output, parents, backward, self, len(self.nodes))
        self.nodes.append(node)
        output._node = node

    def __len__(self) -> int:
        return len(self.nodes)


def record(op: str, values: np.ndarray, parents: Sequence[Tensor], backward: BackwardFn) -> Tensor:
    """Wrap an op result, recording it on the active tape when a gradient can flow."""
    tape = Tape.current()
    needs_grad = tape is not None and any(p.requires_grad for p in parents)
    out = Tensor(values, requires_grad=needs_grad)
    if needs_grad:
        tape.record(op, out, tuple(parents), backward)
    return out


def _accumulate(tensor: Tensor, grad: np.ndarray) -> None:
    grad = np.asarray(grad, dtype=np.float64).reshape(tensor.values.shape)
    if tensor.grad is None:
        tensor.grad = grad.copy()
    else:
        tensor.grad += grad


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every requires_grad tensor reachable from ``loss``.

    Leaf gradients accumulate across calls; clear them with ``zero_grad``.
    """
    if loss.values.size != 1:
        raise ShapeMismatch(f"backward() needs a scalar loss, got shape {loss.shape}")
    node = loss._node
    if node is None:
        raise DetachedTensor("loss was not produced on a tape")

    _accumulate(loss, np.ones_like(loss.values))
    for current in reversed(node.tape.nodes[: node.index + 1]):
        grad_out = current.output.grad
        if grad_out is None:
            continue
        for parent, grad in zip(current.parents, current.backward(grad_out)):
            if grad is not None and parent.requires_grad:
                _accumulate(parent, grad)
