"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Var` wraps an ndarray value and remembers how it was produced; the
op functions in this module accept either bare arrays or Vars.  When no Var
is involved they just compute the raw numpy result, so the same network code
serves both training (with a tape) and inference (without one).

Gradients are vector-Jacobian products: each op stores a closure that maps
the output cotangent onto cotangents of its parents, and :func:`backward`
replays them in reverse topological order.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import ops as _ops


class Var:
    """A node in the computation graph: a value plus its backward closure."""

    __slots__ = ("value", "grad", "_parents", "_vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = np.asarray(value)
        self.grad = None
        self._parents = tuple(parents)
        self._vjp = vjp

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape}, dtype={self.value.dtype})"


def val(x):
    """The underlying ndarray of a Var, or the input itself."""
    return x.value if isinstance(x, Var) else x


def _is_var(*xs) -> bool:
    return any(isinstance(x, Var) for x in xs)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a cotangent back to the shape of a broadcast operand."""
    g = np.asarray(g)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def backward(root: Var) -> None:
    """Accumulate ``.grad`` on every Var reachable from ``root``.

    The root is seeded with ones (for a scalar loss this is d loss / d loss).
    """
    topo: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))

    root.grad = np.ones_like(root.value)
    for node in reversed(topo):
        if node._vjp is None or node.grad is None:
            continue
        for parent, g in zip(node._parents, node._vjp(node.grad)):
            if g is None:
                continue
            parent.grad = g if parent.grad is None else parent.grad + g


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b):
    if not _is_var(a, b):
        return val(a) + val(b)
    av, bv = val(a), val(b)
    out = av + bv
    parents, slots = [], []
    if isinstance(a, Var):
        parents.append(a)
        slots.append(("a", av.shape))
    if isinstance(b, Var):
        parents.append(b)
        slots.append(("b", np.shape(bv)))

    def vjp(g):
        return tuple(_unbroadcast(g, shp) for _, shp in slots)

    return Var(out, parents, vjp)


def sub(a, b):
    return add(a, mul(b, -1.0))


def mul(a, b):
    if not _is_var(a, b):
        return val(a) * val(b)
    av, bv = np.asarray(val(a)), np.asarray(val(b))
    out = av * bv
    parents, closures = [], []
    if isinstance(a, Var):
        parents.append(a)
        closures.append(lambda g: _unbroadcast(g * bv, av.shape))
    if isinstance(b, Var):
        parents.append(b)
        closures.append(lambda g: _unbroadcast(g * av, bv.shape))

    def vjp(g):
        return tuple(fn(g) for fn in closures)

    return Var(out, parents, vjp)


def div(a, b):
    if not _is_var(a, b):
        return val(a) / val(b)
    av, bv = np.asarray(val(a)), np.asarray(val(b))
    out = av / bv
    parents, closures = [], []
    if isinstance(a, Var):
        parents.append(a)
        closures.append(lambda g: _unbroadcast(g / bv, av.shape))
    if isinstance(b, Var):
        parents.append(b)
        closures.append(lambda g: _unbroadcast(-g * av / (bv * bv), bv.shape))

    def vjp(g):
        return tuple(fn(g) for fn in closures)

    return Var(out, parents, vjp)


def absolute(a):
    if not _is_var(a):
        return np.abs(val(a))
    av = val(a)
    sign = np.sign(av)
    return Var(np.abs(av), (a,), lambda g: (g * sign,))


def mean(a):
    """Mean over all elements, as a 0-d value."""
    if not _is_var(a):
        return np.asarray(val(a)).mean()
    av = val(a)
    n = av.size
    return Var(np.asarray(av.mean(), dtype=av.dtype),
               (a,), lambda g: (np.broadcast_to(g / n, av.shape).astype(av.dtype, copy=False),))


def reshape(a, shape):
    if not _is_var(a):
        return np.reshape(val(a), shape)
    old = a.value.shape
    return Var(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def leaky_relu(a, slope: float = 0.1):
    if not _is_var(a):
        return _ops.leaky_relu(val(a), slope)
    av = val(a)
    out = _ops.leaky_relu(av, slope)
    factor = np.where(av >= 0, np.asarray(1.0, av.dtype), np.asarray(slope, av.dtype))
    return Var(out, (a,), lambda g: (g * factor,))


def softplus(a):
    """Numerically stable ``log(1 + exp(x))``."""
    av = np.asarray(val(a))
    safe = np.minimum(av, 30.0).astype(av.dtype, copy=False)
    out = np.where(av > 30.0, av, np.log1p(np.exp(safe)))
    if not _is_var(a):
        return out
    sig = 1.0 / (1.0 + np.exp(-np.clip(av, -60.0, 60.0)))
    sig = sig.astype(av.dtype, copy=False)
    return Var(out, (a,), lambda g: (g * sig,))


def softmax(a, axis: int):
    """Softmax along one axis."""
    av = np.asarray(val(a))
    shifted = av - av.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    if not _is_var(a):
        return y

    def vjp(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return ((g - dot) * y,)

    return Var(y, (a,), vjp)


# ---------------------------------------------------------------------------
# structured ops


def conv2d(x, w, b, padding: int):
    """Batched (B, C, H, W) convolution; differentiable in x, w and b."""
    if not _is_var(x, w, b):
        return _ops._conv2d_nchw(val(x), val(w), val(b), padding)
    xv, wv, bv = val(x), val(w), val(b)
    out, cols = _ops._conv2d_nchw(xv, wv, bv, padding, want_cols=True)
    parents = [p for p in (x, w, b) if isinstance(p, Var)]

    def vjp(g):
        gx, gw, gb = _ops._conv2d_backward(g, cols, xv.shape, wv, padding)
        grads = {"x": gx, "w": gw, "b": gb}
        out_grads = []
        for name, p in zip(("x", "w", "b"), (x, w, b)):
            if isinstance(p, Var):
                out_grads.append(grads[name])
        return tuple(out_grads)

    return Var(out, parents, vjp)


def pixel_shuffle(x, s: int):
    if not _is_var(x):
        return _ops._pixel_shuffle_nchw(val(x), s)
    out = _ops._pixel_shuffle_nchw(x.value, s)
    return Var(out, (x,), lambda g: (_ops._pixel_unshuffle_nchw(g, s),))


def resample(x, h_out: int, w_out: int):
    """Fixed bicubic resampling as a linear map with its exact adjoint."""
    if not _is_var(x):
        return _ops._resample_nchw(val(x), h_out, w_out)
    xv = x.value
    out = _ops._resample_nchw(xv, h_out, w_out)
    h_in, w_in = xv.shape[2], xv.shape[3]
    return Var(out, (x,), lambda g: (_ops._resample_adjoint_nchw(g, h_in, w_in),))


def concat(parts: list, axis: int = 1):
    """Concatenate along an axis, splitting the cotangent on the way back."""
    if not _is_var(*parts):
        return np.concatenate([val(p) for p in parts], axis=axis)
    values = [np.asarray(val(p)) for p in parts]
    out = np.concatenate(values, axis=axis)
    sizes = [v.shape[axis] for v in values]
    offsets = np.cumsum([0] + sizes)
    parents = [p for p in parts if isinstance(p, Var)]

    def vjp(g):
        slicer = [slice(None)] * g.ndim
        grads = []
        for k, p in enumerate(parts):
            if isinstance(p, Var):
                slicer[axis] = slice(offsets[k], offsets[k + 1])
                grads.append(g[tuple(slicer)])
        return tuple(grads)

    return Var(out, parents, vjp)


def linear(x, w, b):
    """Dense layer ``x @ w + b`` for (B, n) inputs."""
    if not _is_var(x, w, b):
        return val(x) @ val(w) + val(b)
    xv, wv, bv = np.asarray(val(x)), val(w), val(b)
    out = xv @ wv + bv
    parents, closures = [], []
    if isinstance(x, Var):
        parents.append(x)
        closures.append(lambda g: g @ wv.T)
    if isinstance(w, Var):
        parents.append(w)
        closures.append(lambda g: xv.T @ g)
    if isinstance(b, Var):
        parents.append(b)
        closures.append(lambda g: g.sum(axis=0))

    def vjp(g):
        return tuple(fn(g) for fn in closures)

    return Var(out, parents, vjp)


def fused_taps(weights, padded_values: np.ndarray, k: int):
    """Weighted sum of k x k neighbourhoods across a burst.

    ``weights`` has shape (B, N, k*k, H, W) and is differentiable;
    ``padded_values`` is a constant (B, N, H+k-1, W+k-1) stack of gray values.
    Returns (B, H, W): ``out[b,y,x] = sum_{n,t} weights[b,n,t,y,x] *
    padded_values[b,n,y+dy_t,x+dx_t]``.
    """
    wv = np.asarray(val(weights))
    bsz, n, k2, h, w = wv.shape
    win = sliding_window_view(padded_values, (k, k), axis=(2, 3))   # (B,N,H,W,k,k)
    win = win.reshape(bsz, n, h, w, k * k)
    out = np.einsum("bnthw,bnhwt->bhw", wv, win, optimize=True)
    if not _is_var(weights):
        return out

    def vjp(g):
        gw = np.einsum("bhw,bnhwt->bnthw", g, win, optimize=True)
        return (gw,)

    return Var(out, (weights,), vjp)
