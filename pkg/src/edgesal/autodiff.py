"""Minimal reverse-mode tape over the kernel set.

Single-image, define-by-run: every forward builds fresh op nodes that
reference persistent ``Parameter`` leaves, so calling ``backward`` on a
scalar loss accumulates into ``Parameter.grad`` and naturally supports
gradient accumulation across images. Values are numpy arrays (channel-last)
except scalar nodes, whose values are Python floats.
"""

from __future__ import annotations

import numpy as np

from . import kernels as K


class Node:
    __slots__ = ("value", "grad", "parents", "backward_fn", "requires_grad")

    def __init__(self, value, parents=(), backward_fn=None, requires_grad=None):
        self.value = value
        self.grad = None
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in self.parents)
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return np.shape(self.value)


class Parameter(Node):
    __slots__ = ("name",)

    def __init__(self, value: np.ndarray, name: str):
        super().__init__(value, requires_grad=True)
        self.name = name


def constant(value) -> Node:
    return Node(value, requires_grad=False)


def accumulate(node: Node, grad) -> None:
    """Add ``grad`` into ``node.grad``; the first write copies so callers may
    pass shared or borrowed arrays."""
    if not node.requires_grad:
        return
    if node.grad is None:
        node.grad = np.array(grad) if isinstance(grad, np.ndarray) else grad
    else:
        node.grad += grad


def backward(root: Node, seed=1.0) -> None:
    """Propagate gradients from ``root`` to every reachable parameter."""
    topo: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    accumulate(root, seed)
    for node in reversed(topo):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node)


# ---------------------------------------------------------------------------
# array ops


def conv2d(x: Node, w: Node, b: Node) -> Node:
    kh, kw = w.value.shape[0], w.value.shape[1]

    def bwd(out: Node) -> None:
        dy = out.grad
        if x.requires_grad:
            accumulate(x, K.conv2d_input_grad(dy, w.value))
        if w.requires_grad:
            dw, db = K.conv2d_weight_grad(x.value, dy, kh, kw)
            accumulate(w, dw)
            accumulate(b, db)

    return Node(K.conv2d_forward(x.value, w.value, b.value), (x, w, b), bwd)


def relu(x: Node) -> Node:
    def bwd(out: Node) -> None:
        accumulate(x, out.grad * (x.value > 0))

    return Node(np.maximum(x.value, 0), (x,), bwd)


def add(a: Node, b: Node) -> Node:
    def bwd(out: Node) -> None:
        accumulate(a, out.grad)
        accumulate(b, out.grad)

    return Node(a.value + b.value, (a, b), bwd)


def maxpool2(x: Node) -> Node:
    y, idx = K.maxpool2_forward(x.value)

    def bwd(out: Node) -> None:
        accumulate(x, K.maxpool2_backward(idx, out.grad))

    return Node(y, (x,), bwd)


def upsample_bilinear(x: Node, out_h: int, out_w: int) -> Node:
    in_h, in_w = x.value.shape[0], x.value.shape[1]
    if (in_h, in_w) == (out_h, out_w):
        return x

    def bwd(out: Node) -> None:
        accumulate(x, K.resize_bilinear_backward(out.grad, in_h, in_w))

    return Node(K.resize_bilinear_forward(x.value, out_h, out_w), (x,), bwd)


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(x: Node) -> Node:
    p = stable_sigmoid(x.value)

    def bwd(out: Node) -> None:
        accumulate(x, out.grad * (p * (1.0 - p)))

    return Node(p, (x,), bwd)


def weighted_sum(maps: list[Node], weights: list[Node]) -> Node:
    """Sum of ``weights[i] * maps[i]`` with scalar (0-d array) weights."""
    value = np.zeros_like(maps[0].value)
    for m, w in zip(maps, weights):
        value += float(w.value) * m.value

    def bwd(out: Node) -> None:
        for m, w in zip(maps, weights):
            accumulate(m, out.grad * float(w.value))
            accumulate(w, np.asarray(np.sum(out.grad * m.value), dtype=w.value.dtype))

    return Node(value, tuple(maps) + tuple(weights), bwd)


# ---------------------------------------------------------------------------
# scalar ops


def bce_with_logits_sum(logits: Node, target: np.ndarray) -> Node:
    """Summed (not averaged) binary cross-entropy against a {0,1} target.

    The value is evaluated in float64 through the logit form
    ``max(x,0) - x*z + log1p(exp(-|x|))``, which stays finite for saturated
    logits; the gradient is the textbook ``sigmoid(x) - z``.
    """
    if logits.shape != target.shape:
        raise ValueError(
            f"logits shape {logits.shape} != target shape {target.shape}"
        )
    x = logits.value.astype(np.float64, copy=False)
    z = target.astype(np.float64, copy=False)
    value = float(np.sum(np.maximum(x, 0.0) - x * z + np.log1p(np.exp(-np.abs(x)))))

    def bwd(out: Node) -> None:
        p = stable_sigmoid(logits.value)
        accumulate(logits, out.grad * (p - target.astype(logits.value.dtype)))

    return Node(value, (logits,), bwd)


def add_scalars(terms: list[Node]) -> Node:
    """Left-to-right float sum of scalar nodes (fixed order, no fsum)."""
    value = 0.0
    for t in terms:
        value += t.value

    def bwd(out: Node) -> None:
        for t in terms:
            accumulate(t, out.grad)

    return Node(value, tuple(terms), bwd)


def scale_scalar(x: Node, factor: float) -> Node:
    def bwd(out: Node) -> None:
        accumulate(x, out.grad * factor)

    return Node(x.value * factor, (x,), bwd)
