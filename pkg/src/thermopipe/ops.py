"""Core image operators: convolution, activation, pixel shuffle, resampling.

All operators are deterministic, run on plain numpy arrays, and preserve the
floating dtype of their input (float32 in the pipeline, float64 in tests that
need tighter tolerances).  Public functions take channel-first ``(C, H, W)``
tensors or ``(H, W)`` grids; batched ``(B, C, H, W)`` variants used by the
networks and the autodiff layer live in the underscore helpers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ContractViolationError
from .validation import check_grid2d, check_tensor3

__all__ = [
    "ConvKernel",
    "conv2d",
    "leaky_relu",
    "pixel_shuffle",
    "bicubic_resample",
    "downscale_gt",
    "concat_channels",
]


# ---------------------------------------------------------------------------
# convolution


@dataclass
class ConvKernel:
    """Weights of a 2-D convolution: ``weights[out_ch, in_ch, kh, kw]`` plus bias.

    ``padding`` rows/columns of zeros are added on every border before the
    stride-1 valid convolution is applied.
    """

    weights: np.ndarray
    bias: np.ndarray
    padding: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.ndim != 4:
            raise ContractViolationError(
                f"kernel weights must be 4-D (out, in, kh, kw), got shape {w.shape}"
            )
        if min(w.shape) < 1:
            raise ContractViolationError(f"kernel dims must be >= 1, got {w.shape}")
        b = np.asarray(self.bias)
        if b.shape != (w.shape[0],):
            raise ContractViolationError(
                f"bias must have shape ({w.shape[0]},), got {b.shape}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ContractViolationError("kernel weights and bias must be finite")
        if int(self.padding) != self.padding or self.padding < 0:
            raise ContractViolationError(f"padding must be a non-negative integer, got {self.padding}")
        self.weights = w
        self.bias = b
        self.padding = int(self.padding)


def conv2d(x: np.ndarray, kernel: ConvKernel) -> np.ndarray:
    """Stride-1 2-D convolution (cross-correlation) of a (C, H, W) tensor.

    Output shape is ``(out_ch, H + 2p - kh + 1, W + 2p - kw + 1)``; the output
    spatial dims must come out >= 1.
    """
    x = check_tensor3(x, "conv2d input")
    w = kernel.weights
    if x.shape[0] != w.shape[1]:
        raise ContractViolationError(
            f"conv2d: input has {x.shape[0]} channels but kernel expects {w.shape[1]}"
        )
    out = _conv2d_nchw(x[None], w.astype(x.dtype, copy=False),
                       kernel.bias.astype(x.dtype, copy=False), kernel.padding)
    return out[0]


def _conv2d_nchw(x: np.ndarray, w: np.ndarray, b: np.ndarray | None, padding: int,
                 want_cols: bool = False):
    """Batched convolution core.  Returns the output, or (output, cols) when
    the im2col matrix is needed for the backward pass."""
    bsz, cin, h, wd = x.shape
    o, i, kh, kw = w.shape
    if cin != i:
        raise ContractViolationError(
            f"conv2d: input has {cin} channels but kernel expects {i}"
        )
    p = padding
    ho, wo = h + 2 * p - kh + 1, wd + 2 * p - kw + 1
    if ho < 1 or wo < 1:
        raise ContractViolationError(
            f"conv2d: kernel {kh}x{kw} with padding {p} does not fit input {h}x{wd}"
        )
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))        # (B,C,Ho,Wo,kh,kw)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(bsz * ho * wo, cin * kh * kw)
    out = cols @ w.reshape(o, -1).T                             # (B*Ho*Wo, O)
    if b is not None:
        out += b
    out = out.reshape(bsz, ho, wo, o).transpose(0, 3, 1, 2)
    out = np.ascontiguousarray(out)
    if want_cols:
        return out, cols
    return out


def _conv2d_backward(g: np.ndarray, cols: np.ndarray, x_shape, w: np.ndarray, padding: int):
    """Gradients of the batched convolution w.r.t. input, weights and bias."""
    bsz, cin, h, wd = x_shape
    o, i, kh, kw = w.shape
    p = padding
    ho, wo = g.shape[2], g.shape[3]
    g2 = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(-1, o)
    gw = (g2.T @ cols).reshape(w.shape)
    gb = g2.sum(axis=0)
    gcols = g2 @ w.reshape(o, -1)                               # (B*Ho*Wo, C*kh*kw)
    gc = gcols.reshape(bsz, ho, wo, cin, kh, kw).transpose(0, 3, 1, 2, 4, 5)
    gxp = np.zeros((bsz, cin, h + 2 * p, wd + 2 * p), dtype=g.dtype)
    for di in range(kh):
        for dj in range(kw):
            gxp[:, :, di:di + ho, dj:dj + wo] += gc[..., di, dj]
    gx = gxp[:, :, p:p + h, p:p + wd] if p else gxp
    return gx, gw, gb


# ---------------------------------------------------------------------------
# activation


def leaky_relu(x: np.ndarray, slope: float = 0.1) -> np.ndarray:
    """Elementwise ``x if x >= 0 else slope * x`` with slope in [0, 1)."""
    if not 0.0 <= slope < 1.0:
        raise ContractViolationError(f"leaky_relu slope must be in [0, 1), got {slope}")
    x = np.asarray(x)
    return np.where(x >= 0, x, x * np.asarray(slope, dtype=x.dtype))


# ---------------------------------------------------------------------------
# pixel shuffle


def pixel_shuffle(x: np.ndarray, s: int) -> np.ndarray:
    """Rearrange (C*s^2, H, W) into (C, s*H, s*W).

    ``out[c, y, x] = in[c*s^2 + (y mod s)*s + (x mod s), y // s, x // s]``.
    """
    x = check_tensor3(x, "pixel_shuffle input")
    if int(s) != s or s < 1:
        raise ContractViolationError(f"pixel_shuffle factor must be an integer >= 1, got {s}")
    s = int(s)
    c, h, w = x.shape
    if c % (s * s) != 0:
        raise ContractViolationError(
            f"pixel_shuffle: {c} channels not divisible by s^2 = {s * s}"
        )
    return _pixel_shuffle_nchw(x[None], s)[0]


def _pixel_shuffle_nchw(x: np.ndarray, s: int) -> np.ndarray:
    bsz, c, h, w = x.shape
    co = c // (s * s)
    out = x.reshape(bsz, co, s, s, h, w).transpose(0, 1, 4, 2, 5, 3)
    return np.ascontiguousarray(out).reshape(bsz, co, h * s, w * s)


def _pixel_unshuffle_nchw(x: np.ndarray, s: int) -> np.ndarray:
    """Inverse rearrangement; used as the pixel-shuffle gradient."""
    bsz, co, hs, ws = x.shape
    h, w = hs // s, ws // s
    out = x.reshape(bsz, co, h, s, w, s).transpose(0, 1, 3, 5, 2, 4)
    return np.ascontiguousarray(out).reshape(bsz, co * s * s, h, w)


# ---------------------------------------------------------------------------
# bicubic resampling


def _cubic_weights(t: np.ndarray) -> np.ndarray:
    """Catmull-Rom cubic convolution kernel (a = -0.5) evaluated at |t|."""
    a = -0.5
    t = np.abs(t)
    w = np.zeros_like(t)
    near = t <= 1.0
    far = (t > 1.0) & (t < 2.0)
    w[near] = (a + 2.0) * t[near] ** 3 - (a + 3.0) * t[near] ** 2 + 1.0
    w[far] = a * t[far] ** 3 - 5.0 * a * t[far] ** 2 + 8.0 * a * t[far] - 4.0 * a
    return w


def _resample_matrix_1d(n_in: int, n_out: int) -> np.ndarray:
    """Dense (n_out, n_in) matrix applying cubic resampling along one axis.

    Sample positions follow the half-pixel convention
    ``src = (dst + 0.5) * n_in / n_out - 0.5``; out-of-range neighbours are
    clamped to the border sample, which keeps every row summing to 1.
    """
    m = np.zeros((n_out, n_in), dtype=np.float64)
    dst = np.arange(n_out, dtype=np.float64)
    src = (dst + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(src).astype(np.int64)
    frac = src - base
    for off in range(-1, 3):
        idx = np.clip(base + off, 0, n_in - 1)
        wts = _cubic_weights(frac - off)
        np.add.at(m, (np.arange(n_out), idx), wts)
    return m


_MATRIX_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _resample_matrices(h_in: int, w_in: int, h_out: int, w_out: int, dtype) -> tuple[np.ndarray, np.ndarray]:
    key = (h_in, w_in, h_out, w_out, np.dtype(dtype).str)
    hit = _MATRIX_CACHE.get(key)
    if hit is None:
        mr = _resample_matrix_1d(h_in, h_out).astype(dtype)
        mc = _resample_matrix_1d(w_in, w_out).astype(dtype)
        if len(_MATRIX_CACHE) > 64:
            _MATRIX_CACHE.clear()
        hit = _MATRIX_CACHE[key] = (mr, mc)
    return hit


def _resample_nchw(x: np.ndarray, h_out: int, w_out: int) -> np.ndarray:
    """Apply separable cubic resampling to a (B, C, H, W) array."""
    mr, mc = _resample_matrices(x.shape[2], x.shape[3], h_out, w_out, x.dtype)
    tmp = x @ mc.T                       # (B, C, H, w_out)
    return np.matmul(mr, tmp)            # (B, C, h_out, w_out)


def _resample_adjoint_nchw(g: np.ndarray, h_in: int, w_in: int) -> np.ndarray:
    """Exact adjoint of :func:`_resample_nchw` (transposed weight matrices)."""
    mr, mc = _resample_matrices(h_in, w_in, g.shape[2], g.shape[3], g.dtype)
    tmp = np.matmul(mr.T, g)             # (B, C, h_in, w_out)
    return tmp @ mc                      # (B, C, h_in, w_in)


def bicubic_resample(x: np.ndarray, factor: float) -> np.ndarray:
    """Resample an (H, W) grid by a positive scale factor.

    Cubic convolution with the Catmull-Rom coefficient, half-pixel centres,
    and border clamping.  Output dims are ``round(dim * factor)`` and must be
    >= 1.
    """
    x = check_grid2d(x, "bicubic_resample input")
    factor = float(factor)
    if not np.isfinite(factor) or factor <= 0:
        raise ContractViolationError(f"resample factor must be > 0, got {factor}")
    h_out = int(round(x.shape[0] * factor))
    w_out = int(round(x.shape[1] * factor))
    if h_out < 1 or w_out < 1:
        raise ContractViolationError(
            f"resample factor {factor} collapses {x.shape} to zero size"
        )
    return _resample_nchw(x[None, None], h_out, w_out)[0, 0]


def downscale_gt(x: np.ndarray, s: int) -> np.ndarray:
    """Downscale a ground-truth map by an integer factor that divides its dims."""
    x = check_grid2d(x, "downscale_gt input")
    if int(s) != s or s < 1:
        raise ContractViolationError(f"downscale factor must be an integer >= 1, got {s}")
    s = int(s)
    if x.shape[0] % s or x.shape[1] % s:
        raise ContractViolationError(
            f"downscale_gt: dims {x.shape} not divisible by {s}"
        )
    return _resample_nchw(x[None, None], x.shape[0] // s, x.shape[1] // s)[0, 0]


# ---------------------------------------------------------------------------
# channel concat


def concat_channels(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Stack two (C, H, W) tensors along the channel axis."""
    a = check_tensor3(a, "concat_channels first input")
    b = check_tensor3(b, "concat_channels second input")
    if a.shape[0] and b.shape[0] and a.shape[1:] != b.shape[1:]:
        raise ContractViolationError(
            f"concat_channels: spatial dims differ, {a.shape[1:]} vs {b.shape[1:]}"
        )
    if a.shape[0] == 0:
        return b.copy()
    if b.shape[0] == 0:
        return a.copy()
    return np.concatenate([a, b], axis=0)
