"""Minimal reverse-mode autodiff over float64 numpy arrays.

Covers exactly the op set the models here need (dense/conv nets, softmax
cross-entropy, flow fields, and the guidance chain that differentiates a
predictor composed with a decoder and a velocity-field extrapolation). Every
op's backward is checked against central finite differences in the test suite.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """Node in the computation tape: a float64 array plus backward closure."""

    __slots__ = ("data", "grad", "parents", "_backward")

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, grad=None):
        """Reverse-mode sweep seeding this node's adjoint (defaults to ones)."""
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:  # iterative DFS: tapes can exceed the recursion limit
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                stack.append((p, False))
        self._accumulate(np.ones_like(self.data) if grad is None else np.asarray(grad, dtype=np.float64))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar; scalars and arrays are wrapped as constant leaves
    def __add__(self, other):
        return add(self, as_tensor(other))

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return add(self, mul(as_tensor(other), as_tensor(-1.0)))

    def __rsub__(self, other):
        return add(as_tensor(other), mul(self, as_tensor(-1.0)))

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    def __rmul__(self, other):
        return mul(as_tensor(other), self)

    def __neg__(self):
        return mul(self, as_tensor(-1.0))

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division only supported by plain scalars")
        return mul(self, as_tensor(1.0 / float(other)))

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))

    def __getitem__(self, key):
        return take_slice(self, key)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient over axes that were broadcast in the forward op."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data, parents=(a, b))

    def backward(g):
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(g, b.data.shape))

    out._backward = backward
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data * b.data, parents=(a, b))

    def backward(g):
        a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    out._backward = backward
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    out = Tensor(a.data @ b.data, parents=(a, b))

    def backward(g):
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)

    out._backward = backward
    return out


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = Tensor(np.where(mask, x.data, 0.0), parents=(x,))
    out._backward = lambda g: x._accumulate(g * mask)
    return out


def leaky_relu(x: Tensor, alpha: float = 0.01) -> Tensor:
    mask = x.data > 0
    out = Tensor(np.where(mask, x.data, alpha * x.data), parents=(x,))
    out._backward = lambda g: x._accumulate(g * np.where(mask, 1.0, alpha))
    return out


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    out = Tensor(y, parents=(x,))
    out._backward = lambda g: x._accumulate(g * (1.0 - y * y))
    return out


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    out = Tensor(y, parents=(x,))
    out._backward = lambda g: x._accumulate(g * y)
    return out


def log(x: Tensor) -> Tensor:
    out = Tensor(np.log(x.data), parents=(x,))
    out._backward = lambda g: x._accumulate(g / x.data)
    return out


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(p, parents=(x,))

    def backward(g):
        dot = (g * p).sum(axis=axis, keepdims=True)
        x._accumulate(p * (g - dot))

    out._backward = backward
    return out


def logsumexp(x: Tensor, axis: int = -1) -> Tensor:
    m = x.data.max(axis=axis, keepdims=True)
    e = np.exp(x.data - m)
    s = e.sum(axis=axis, keepdims=True)
    out = Tensor(np.squeeze(m + np.log(s), axis=axis), parents=(x,))

    def backward(g):
        x._accumulate(np.expand_dims(g, axis) * (e / s))

    out._backward = backward
    return out


def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(x.data.sum(axis=axis, keepdims=keepdims), parents=(x,))

    def backward(g):
        if axis is None:
            x._accumulate(np.broadcast_to(g, x.data.shape).astype(np.float64))
            return
        if not keepdims:
            g = np.expand_dims(g, axis)
        x._accumulate(np.broadcast_to(g, x.data.shape).astype(np.float64))

    out._backward = backward
    return out


def tmean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = x.data.size if axis is None else x.data.shape[axis]
    return tsum(x, axis=axis, keepdims=keepdims) * (1.0 / count)


def reshape(x: Tensor, shape) -> Tensor:
    out = Tensor(x.data.reshape(shape), parents=(x,))
    out._backward = lambda g: x._accumulate(g.reshape(x.data.shape))
    return out


def transpose(x: Tensor, axes) -> Tensor:
    inv = np.argsort(axes)
    out = Tensor(x.data.transpose(axes), parents=(x,))
    out._backward = lambda g: x._accumulate(g.transpose(inv))
    return out


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), parents=tuple(tensors))
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            t._accumulate(piece)

    out._backward = backward
    return out


def take_slice(x: Tensor, key) -> Tensor:
    out = Tensor(x.data[key], parents=(x,))

    def backward(g):
        full = np.zeros_like(x.data)
        full[key] = g
        x._accumulate(full)

    out._backward = backward
    return out


def gather_last(x: Tensor, index: np.ndarray) -> Tensor:
    """Pick one entry along the last axis per leading position:
    out[..., i] = x[..., i, index[..., i]]."""
    index = np.asarray(index, dtype=np.int64)
    picked = np.take_along_axis(x.data, index[..., None], axis=-1)
    out = Tensor(np.squeeze(picked, axis=-1), parents=(x,))

    def backward(g):
        full = np.zeros_like(x.data)
        # one slot per (..., i) position, so assignment == accumulation
        np.put_along_axis(full, index[..., None], g[..., None], axis=-1)
        x._accumulate(full)

    out._backward = backward
    return out


def conv1d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Stride-1, same-padding 1-D convolution.

    x: (B, C_in, L); w: (C_out, C_in, k) with odd k; b: (C_out,).
    """
    B, cin, L = x.data.shape
    cout, cin_w, k = w.data.shape
    if cin != cin_w:
        raise ValueError(f"conv1d channel mismatch: input {cin}, weight {cin_w}")
    if k % 2 != 1:
        raise ValueError("conv1d kernel width must be odd")
    pad = k // 2
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad)))
    # (B, C_in, L, k) sliding windows -> (B*L, C_in*k)
    windows = np.lib.stride_tricks.sliding_window_view(xp, k, axis=2)
    cols = windows.transpose(0, 2, 1, 3).reshape(B * L, cin * k)
    wf = w.data.reshape(cout, cin * k)
    y = (cols @ wf.T).reshape(B, L, cout).transpose(0, 2, 1) + b.data[None, :, None]
    out = Tensor(y, parents=(x, w, b))

    def backward(g):
        gf = g.transpose(0, 2, 1).reshape(B * L, cout)
        w._accumulate((gf.T @ cols).reshape(cout, cin, k))
        b._accumulate(g.sum(axis=(0, 2)))
        dcols = (gf @ wf).reshape(B, L, cin, k)
        dxp = np.zeros_like(xp)
        for j in range(k):
            dxp[:, :, j:j + L] += dcols[:, :, :, j].transpose(0, 2, 1)
        x._accumulate(dxp[:, :, pad:pad + L])

    out._backward = backward
    return out
