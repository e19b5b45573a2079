"""Reverse-mode automatic differentiation over float64 NumPy arrays.

Every operation that sees at least one tracked input appends nothing to a
global structure; instead the output tensor itself records its parents and a
closure computing parent gradients from its own, so the tape is the implicit
DAG hanging off the loss.  ``backward`` topologically orders that DAG and
accumulates gradients into parameter leaves.  Recording is a thread-local
switch: inside ``no_grad()`` outputs carry no history and the graph is never
built.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Sequence

import numpy as np

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


class no_grad:
    """Context manager disabling tape recording on the current thread."""

    def __enter__(self) -> "no_grad":
        self._prev = grad_enabled()
        _state.grad_enabled = False
        return self

    def __exit__(self, *exc) -> None:
        _state.grad_enabled = self._prev


BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Tensor:
    """A float64 array plus optional differentiation record.

    ``parents`` and ``backward_fn`` are set only on op outputs created while
    recording; ``grad`` is populated on parameter leaves by ``backward``.
    """

    __slots__ = ("data", "parents", "backward_fn", "grad", "op")

    def __init__(
        self,
        data,
        parents: tuple["Tensor", ...] = (),
        backward_fn: BackwardFn | None = None,
        op: str = "leaf",
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = parents
        self.backward_fn = backward_fn
        self.grad: np.ndarray | None = None
        self.op = op

    @property
    def tracked(self) -> bool:
        return self.backward_fn is not None or self.grad is not None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(op={self.op!r}, shape={self.data.shape})"

    # Convenience operators; the full primitive set lives in numerics.ops.
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, other)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def record(
    data: np.ndarray,
    parents: tuple[Tensor, ...],
    backward_builder: Callable[[], BackwardFn],
    op: str,
) -> Tensor:
    """Wrap an op result, attaching history only when it can matter."""
    if grad_enabled() and any(p.tracked for p in parents):
        return Tensor(data, parents, backward_builder(), op)
    return Tensor(data, op=op)


def backward(loss: Tensor, parameters: Iterable[Tensor]) -> None:
    """Accumulate d loss / d p into ``p.grad`` for every parameter given.

    The loss must be scalar.  Parameters the loss does not reach keep a zero
    gradient.  Gradients add onto whatever ``p.grad`` already holds, so the
    caller zeroes them between steps.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    params = list(parameters)
    for p in params:
        if p.grad is None:
            p.grad = np.zeros_like(p.data)

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in visited:
                stack.append((parent, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.backward_fn is None:
            if node.grad is not None:
                node.grad += g
            continue
        parent_grads = node.backward_fn(g)
        for parent, pg in zip(node.parents, parent_grads):
            if pg is None:
                continue
            held = grads.get(id(parent))
            grads[id(parent)] = pg if held is None else held + pg
