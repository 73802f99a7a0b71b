"""Dense-tensor engine with tape-based reverse-mode automatic differentiation.

Values are numpy arrays (float64 by default, float32 selectable). Gradients
are recorded only while a Graph is active: operations executed inside a
``with Graph():`` block append a node per op, and ``backward(loss)`` replays
the tape in exact reverse order. Outside a graph the same operations run as
plain numpy forward passes, which is the fast inference path.

A Graph is single-owner: one recording, one backward. Re-running backward on
the same recording raises GraphError.
"""

from __future__ import annotations

import threading
from typing import Callable, Optional, Sequence

import numpy as np

from est.errors import GraphError, ShapeError

DEFAULT_DTYPE = np.float64
FLOAT_DTYPES = (np.float32, np.float64)

_state = threading.local()


def active_graph() -> Optional["Graph"]:
    return getattr(_state, "graph", None)


class Tensor:
    """A dense array plus optional gradient accumulator.

    ``requires_grad`` marks leaf parameters. Tensors produced by recorded ops
    carry a reference to their tape node instead; both kinds participate in
    backward. Tensors without grad are immutable by convention and safe to
    share across graphs.
    """

    __slots__ = ("data", "grad", "requires_grad", "node", "name")

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: Optional[str] = None):
        arr = np.asarray(data, dtype=dtype if dtype is not None else None)
        if arr.dtype not in FLOAT_DTYPES:
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.node: Optional[Node] = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def tracked(self) -> bool:
        return self.requires_grad or self.node is not None

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g: np.ndarray):
        if g.shape != self.data.shape:
            raise ShapeError(f"gradient shape {g.shape} != value shape {self.data.shape}")
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad = self.grad + g

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}{tag})"


class Node:
    """One recorded operation: inputs, output, and its vector-Jacobian product."""

    __slots__ = ("op", "inputs", "out", "vjp", "graph")

    def __init__(self, op: str, inputs: Sequence[Tensor], out: Tensor,
                 vjp: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
                 graph: "Graph"):
        self.op = op
        self.inputs = tuple(inputs)
        self.out = out
        self.vjp = vjp
        self.graph = graph


class Graph:
    """Recording tape. Nodes are appended in execution order, which is a
    topological order of the computation DAG, so backward can traverse the
    list in reverse without an explicit sort."""

    def __init__(self, seed: int = 0):
        self.nodes: list[Node] = []
        self.seed = int(seed)
        self.finished = False
        self._prev = None

    def __enter__(self):
        self._prev = active_graph()
        _state.graph = self
        return self

    def __exit__(self, exc_type, exc, tb):
        _state.graph = self._prev
        self._prev = None
        return False


def record(op: str, inputs: Sequence[Tensor], out: Tensor,
           vjp: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]) -> Tensor:
    """Attach a tape node to ``out`` if a graph is active and any input is tracked."""
    graph = active_graph()
    if graph is not None and any(t.tracked for t in inputs):
        node = Node(op, inputs, out, vjp, graph)
        out.node = node
        graph.nodes.append(node)
    return out


def backward(loss: Tensor) -> None:
    """Accumulate exact reverse-mode gradients of a scalar loss into every
    tracked tensor reachable from it on the recording tape."""
    if loss.data.shape != ():
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.data.shape}")
    if loss.node is None:
        raise GraphError("loss was not produced by a recorded graph")
    graph = loss.node.graph
    if graph.finished:
        raise GraphError("backward already ran on this graph; run a new forward first")
    graph.finished = True
    loss.accumulate_grad(np.ones((), dtype=loss.data.dtype))
    for node in reversed(graph.nodes):
        g_out = node.out.grad
        if g_out is None:
            continue
        grads = node.vjp(g_out)
        for t, g in zip(node.inputs, grads):
            if g is None or not t.tracked:
                continue
            t.accumulate_grad(np.asarray(g, dtype=t.data.dtype))


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x), dtype=dtype)
