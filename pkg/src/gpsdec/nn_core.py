"""Small reverse-mode autodiff over float64 numpy arrays, plus Adam.

Only the operations the permutation embedder, the classifier and the
skip-gram trainer need. Broadcasting is limited to adding a tensor whose
shape is a suffix of the other operand's shape (biases, shared positional
tables).
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from typing import Callable, Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, _parents: tuple = (), op: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self.grad = None
        self._parents = _parents
        self._backward: Callable[[np.ndarray], None] | None = None
        self.op = op

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op or 'leaf'})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def _accum(self, g: np.ndarray):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        order = _topological(self)
        grads = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accum(g)
                continue
            for parent, pg in node._backward(g):
                if parent.requires_grad:
                    key = id(parent)
                    if key in grads:
                        grads[key] = grads[key] + pg
                    else:
                        grads[key] = pg

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _topological(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


_recording = True


@contextmanager
def no_grad():
    """Forward passes inside the block record nothing."""
    global _recording
    prev, _recording = _recording, False
    try:
        yield
    finally:
        _recording = prev


def _node(data, parents, op, backward) -> Tensor:
    if not _recording:
        return Tensor(data, op=op)
    out = Tensor(data, _parents=tuple(parents), op=op)
    if out.requires_grad:
        out._backward = backward
    return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Param(Tensor):
    """Trainable leaf carrying its own Adam moments."""

    __slots__ = ("adam_m", "adam_v", "step_count", "name")

    def __init__(self, data, name: str = ""):
        super().__init__(data, requires_grad=True)
        self.grad = np.zeros_like(self.data)
        self.adam_m = np.zeros_like(self.data)
        self.adam_v = np.zeros_like(self.data)
        self.step_count = 0
        self.name = name

    def __repr__(self):
        return f"Param({self.name or '?'}, shape={self.shape})"

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)


# ---------------------------------------------------------------- elementwise


def _sum_to(g: np.ndarray, shape: tuple) -> np.ndarray:
    lead = g.ndim - len(shape)
    return g.sum(axis=tuple(range(lead))) if lead else g


def add(a, b) -> Tensor:
    """``a + b``; ``b`` may have a shape that is a suffix of ``a``'s."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape and (len(b.shape) > len(a.shape)
                               or a.shape[len(a.shape) - len(b.shape):] != b.shape):
        raise ShapeError(f"add: {a.shape} and {b.shape}")
    return _node(a.data + b.data, (a, b), "add",
                 lambda g: ((a, g), (b, _sum_to(g, b.shape))))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"sub: {a.shape} and {b.shape}")
    return _node(a.data - b.data, (a, b), "sub", lambda g: ((a, g), (b, -g)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"mul: {a.shape} and {b.shape}")
    return _node(a.data * b.data, (a, b), "mul",
                 lambda g: ((a, g * b.data), (b, g * a.data)))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    return _node(a.data * c, (a,), "scale", lambda g: ((a, g * c),))


def absolute(a) -> Tensor:
    a = as_tensor(a)
    return _node(np.abs(a.data), (a,), "abs", lambda g: ((a, g * np.sign(a.data)),))


def leaky_relu(x, slope: float = 0.1) -> Tensor:
    if not 0 < slope < 1:
        raise ValueError("slope must lie in (0, 1)")
    x = as_tensor(x)
    pos = x.data >= 0
    return _node(np.where(pos, x.data, slope * x.data), (x,), "leaky_relu",
                 lambda g: ((x, np.where(pos, g, slope * g)),))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    s = np.empty_like(x.data)
    pos = x.data >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
    e = np.exp(x.data[~pos])
    s[~pos] = e / (1.0 + e)
    return _node(s, (x,), "sigmoid", lambda g: ((x, g * s * (1.0 - s)),))


def log_sigmoid(x) -> Tensor:
    x = as_tensor(x)
    out = -np.logaddexp(0.0, -x.data)
    return _node(out, (x,), "log_sigmoid",
                 lambda g: ((x, g * (1.0 - np.exp(out))),))


# ---------------------------------------------------------------- linear algebra


def matmul(a, b) -> Tensor:
    """``a @ b`` for 2-D operands, a batched left operand with a 2-D right
    operand, or two batches of equal leading shape."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    if b.data.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"matmul batch dims differ: {a.shape} @ {b.shape}")
    if a.data.ndim < b.data.ndim:
        raise ShapeError(f"matmul: right operand has more batch dims: {a.shape} @ {b.shape}")

    def back(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        if b.data.ndim == 2 and a.data.ndim > 2:
            gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = np.swapaxes(a.data, -1, -2) @ g
        return (a, ga), (b, gb)

    return _node(a.data @ b.data, (a, b), "matmul", back)


def transpose(a) -> Tensor:
    """Swap the last two axes."""
    a = as_tensor(a)
    return _node(np.swapaxes(a.data, -1, -2), (a,), "transpose",
                 lambda g: ((a, np.swapaxes(g, -1, -2)),))


def linear(x, W, b=None) -> Tensor:
    """``x W^T + b`` with ``W`` stored as (out, in)."""
    y = matmul(x, transpose(W))
    return add(y, b) if b is not None else y


# ---------------------------------------------------------------- reductions & shaping


def softmax(x) -> Tensor:
    """Softmax along the last axis (max-shifted)."""
    x = as_tensor(x)
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        return ((x, s * (g - (g * s).sum(axis=-1, keepdims=True))),)

    return _node(s, (x,), "softmax", back)


def softmax_row(b) -> Tensor:
    return softmax(b)


def mean(x, axis: int | None = None) -> Tensor:
    x = as_tensor(x)
    if axis is None:
        n = x.data.size
        return _node(np.array(x.data.mean()), (x,), "mean",
                     lambda g: ((x, np.full(x.shape, float(g) / n)),))
    n = x.shape[axis]
    return _node(x.data.mean(axis=axis), (x,), "mean",
                 lambda g: ((x, np.repeat(np.expand_dims(g, axis), n, axis=axis) / n),))


def total(x, axis: int | None = None) -> Tensor:
    x = as_tensor(x)
    if axis is None:
        return _node(np.array(x.data.sum()), (x,), "sum",
                     lambda g: ((x, np.full(x.shape, float(g))),))
    n = x.shape[axis]
    return _node(x.data.sum(axis=axis), (x,), "sum",
                 lambda g: ((x, np.repeat(np.expand_dims(g, axis), n, axis=axis)),))


def concat(parts: Sequence[Tensor], axis: int = -1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    sizes = [p.shape[axis] for p in parts]
    bounds = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(zip(parts, np.split(g, bounds, axis=axis)))

    return _node(np.concatenate([p.data for p in parts], axis=axis), parts, "concat", back)


def gather_rows(table, idx) -> Tensor:
    """``table[idx]`` for an integer index array of any shape."""
    table = as_tensor(table)
    idx = np.asarray(idx, dtype=np.int64)

    def back(g):
        flat = idx.reshape(-1)
        gf = g.reshape(flat.size, -1)
        out = np.zeros((table.shape[0], gf.shape[1]))
        # sort-and-reduce is far faster than np.add.at for many repeats
        order = np.argsort(flat, kind="stable")
        sf = flat[order]
        starts = np.flatnonzero(np.r_[True, sf[1:] != sf[:-1]])
        if flat.size:
            out[sf[starts]] = np.add.reduceat(gf[order], starts, axis=0)
        return ((table, out.reshape(table.shape)),)

    return _node(table.data[idx], (table,), "gather", back)


def take(x, idx) -> Tensor:
    """Per-row element pick: ``out[b, j] = x[b, idx[b, j]]`` for 2-D ``x``."""
    x = as_tensor(x)
    idx = np.asarray(idx, dtype=np.int64)
    if x.data.ndim != 2 or idx.ndim != 2 or idx.shape[0] != x.shape[0]:
        raise ShapeError(f"take: {x.shape} with index {idx.shape}")
    rows = np.arange(x.shape[0])[:, None]

    def back(g):
        out = np.zeros_like(x.data)
        np.add.at(out, (np.broadcast_to(rows, idx.shape), idx), g)
        return ((x, out),)

    return _node(x.data[rows, idx], (x,), "take", back)


def bce_loss(p, d, eps: float = 1e-12) -> Tensor:
    """Mean binary cross entropy of probabilities ``p`` against 0/1 labels.

    ``p`` is clamped to [eps, 1 - eps]; the clamp passes no gradient.
    """
    p = as_tensor(p)
    d = np.asarray(d, dtype=np.float64).reshape(p.shape)
    pc = np.clip(p.data, eps, 1.0 - eps)
    inside = (p.data >= eps) & (p.data <= 1.0 - eps)
    n = p.data.size
    val = -(d * np.log(pc) + (1.0 - d) * np.log1p(-pc)).mean()

    def back(g):
        dp = (-(d / pc) + (1.0 - d) / (1.0 - pc)) * inside / n
        return ((p, float(g) * dp),)

    return _node(np.array(val), (p,), "bce", back)


def bce_with_logits(z, d, eps: float = 1e-12) -> Tensor:
    """``bce_loss(sigmoid(z), d, eps)`` computed from the logits.

    Same value and clamp (logits beyond logit(1 - eps) pass no gradient) but
    without the cancellation in ``1 - p`` when the sigmoid saturates.
    """
    z = as_tensor(z)
    d = np.asarray(d, dtype=np.float64).reshape(z.shape)
    lim = math.log((1.0 - eps) / eps)
    zc = np.clip(z.data, -lim, lim)
    inside = np.abs(z.data) <= lim
    n = z.data.size
    # -log p = softplus(-z), -log(1 - p) = softplus(z)
    val = (d * np.logaddexp(0.0, -zc) + (1.0 - d) * np.logaddexp(0.0, zc)).mean()

    def back(g):
        p = np.exp(-np.logaddexp(0.0, -zc))
        return ((z, float(g) * (p - d) * inside / n),)

    return _node(np.array(val), (z,), "bce_logits", back)


# ---------------------------------------------------------------- optimizers


def adam_step(params: Iterable[Param], lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8):
    """Bias-corrected Adam update in place; gradients are zeroed afterwards."""
    for p in params:
        g = p.grad
        p.step_count += 1
        t = p.step_count
        p.adam_m *= beta1
        p.adam_m += (1.0 - beta1) * g
        p.adam_v *= beta2
        p.adam_v += (1.0 - beta2) * g * g
        m_hat = p.adam_m / (1.0 - beta1**t)
        v_hat = p.adam_v / (1.0 - beta2**t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
        p.zero_grad()


class Adam:
    def __init__(self, params: Sequence[Param], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        adam_step(self.params, self.lr, self.beta1, self.beta2, self.eps)


def sgd_step(params: Iterable[Param], lr: float):
    for p in params:
        p.data -= lr * p.grad
        p.zero_grad()


# ---------------------------------------------------------------- gradient check


def grad_check(f: Callable[[], Tensor], params: Sequence[Param], step: float = 1e-5) -> float:
    """Max over all coordinates of |analytic - numeric| / max(1, |a|, |n|),
    numeric by central differences."""
    for p in params:
        p.zero_grad()
    f().backward()
    analytic = [p.grad.copy() for p in params]
    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        af = a.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            up = f().item()
            flat[i] = old - step
            down = f().item()
            flat[i] = old
            num = (up - down) / (2 * step)
            err = abs(af[i] - num) / max(1.0, abs(af[i]), abs(num))
            worst = max(worst, err)
    for p in params:
        p.zero_grad()
    return worst


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)
