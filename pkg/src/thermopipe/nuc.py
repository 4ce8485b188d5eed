"""Nonuniformity correction: gray frames to radiometric temperature maps.

Two estimators are provided.  The single-frame network decomposes its
prediction physically — it emits per-pixel gain and offset maps and applies
``T = (L - D) / G`` — with the ambient temperature injected as an extra
input channel.  The multiframe network fuses a registered burst through
per-pixel, per-frame kernels (softmax-normalized over all N*k^2 taps) around
a scalar scene-mean estimate, so misalignment and noise are absorbed by the
learned kernels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import nets
from .burst import Burst
from .camera import AMBIENT_RANGE, GrayFrame, check_ambient
from .errors import ContractViolationError, WeightFormatError
from .nets import WeightStore, conv_pair, require

__all__ = [
    "SingleNucConfig",
    "MultiNucConfig",
    "RegistrationResult",
    "init_single_nuc",
    "init_multi_nuc",
    "nuc_single",
    "nuc_multi",
    "single_nuc_forward",
    "multi_nuc_forward",
    "register_burst",
    "estimate_mean_temp",
]


# ---------------------------------------------------------------------------
# configs


@dataclass(frozen=True)
class SingleNucConfig:
    """Hyper-parameters of the single-frame network."""

    depth: int = 6
    width: int = 32
    kernel: int = 3
    eps_gain: float = 1e-3
    gray_depth: int = 14
    offset_scale: float | None = None     # local texture head scale; None -> 64 gray
    bulk_hidden: int = 8
    bulk_scale: float = 1024.0            # output scale of the global offset MLP
    t_range: tuple[float, float] = AMBIENT_RANGE
    slope: float = 0.1

    def __post_init__(self):
        if self.depth < 1 or self.width < 1:
            raise ContractViolationError("depth and width must be >= 1")
        if self.kernel % 2 == 0:
            raise ContractViolationError("kernel size must be odd (same-padding)")
        if self.bulk_hidden < 1:
            raise ContractViolationError("bulk_hidden must be >= 1")
        if self.bulk_scale <= 0:
            raise ContractViolationError("bulk_scale must be > 0")

    @property
    def gray_max(self) -> float:
        return float((1 << self.gray_depth) - 1)

    @property
    def offset_gain(self) -> float:
        return 64.0 if self.offset_scale is None else self.offset_scale


@dataclass(frozen=True)
class MultiNucConfig:
    """Hyper-parameters of the multiframe kernel-prediction network."""

    depth: int = 6
    width: int = 32
    k: int = 5                           # fusion kernel size (odd)
    gray_norm: float = 1.0               # gray levels per °C used to scale taps
    est_hidden: int = 8
    est_scale: float = 1000.0            # output scale of the estimator MLP branch
    gray_depth: int = 14
    t_range: tuple[float, float] = AMBIENT_RANGE
    slope: float = 0.1
    registration: bool = True

    def __post_init__(self):
        if self.k % 2 == 0 or self.k < 1:
            raise ContractViolationError("fusion kernel size k must be odd and >= 1")
        if self.gray_norm <= 0:
            raise ContractViolationError("gray_norm must be > 0")

    @property
    def gray_max(self) -> float:
        return float((1 << self.gray_depth) - 1)


# ---------------------------------------------------------------------------
# initialization


def _exact_unit_gain_bias(eps_gain: float) -> np.float32:
    """Gain-head bias whose float32 softplus lands exactly on 1 - eps.

    With zero head weights this makes the untrained network the exact
    identity: gain 1.0, offset 0.
    """
    target = np.float32(1.0)
    base = np.float32(np.log(np.expm1(1.0 - eps_gain)))
    cand = base
    for _ in range(128):
        sp = np.log1p(np.exp(cand))
        if np.float32(sp + np.float32(eps_gain)) == target:
            return cand
        cand = np.nextafter(cand, np.float32(1e9))
    cand = base
    for _ in range(128):
        sp = np.log1p(np.exp(cand))
        if np.float32(sp + np.float32(eps_gain)) == target:
            return cand
        cand = np.nextafter(cand, np.float32(-1e9))
    return base


def init_single_nuc(cfg: SingleNucConfig = SingleNucConfig(), seed: int = 0) -> WeightStore:
    """Kaiming trunk, zero heads: the untrained net maps gray to gray."""
    rng = np.random.default_rng(seed)
    ws: WeightStore = {}
    in_ch = 3
    for i in range(cfg.depth):
        ws[f"single.trunk{i}.w"] = nets.kaiming_conv(rng, cfg.width, in_ch, cfg.kernel, cfg.slope)
        ws[f"single.trunk{i}.b"] = np.zeros(cfg.width, dtype=np.float32)
        in_ch = cfg.width
    ws["single.gain.w"] = nets.zeros_conv(1, cfg.width, cfg.kernel)
    ws["single.gain.b"] = np.array([_exact_unit_gain_bias(cfg.eps_gain)], dtype=np.float32)
    ws["single.offset.w"] = nets.zeros_conv(1, cfg.width, cfg.kernel)
    ws["single.offset.b"] = np.zeros(1, dtype=np.float32)
    ws["single.bulk.h.w"] = _kaiming_dense(rng, 4, cfg.bulk_hidden, cfg.slope)
    ws["single.bulk.h.b"] = np.zeros(cfg.bulk_hidden, dtype=np.float32)
    ws["single.bulk.out.w"] = np.zeros((cfg.bulk_hidden, 1), dtype=np.float32)
    ws["single.bulk.out.b"] = np.zeros(1, dtype=np.float32)
    nets.meta_vector(ws, "single.meta", [
        cfg.depth, cfg.width, cfg.kernel, cfg.eps_gain, cfg.gray_depth,
        cfg.offset_gain, cfg.t_range[0], cfg.t_range[1], cfg.slope,
        cfg.bulk_hidden, cfg.bulk_scale,
    ])
    return ws


def single_config_from_weights(ws: WeightStore) -> SingleNucConfig:
    meta = ws.get("single.meta")
    if meta is None:
        raise WeightFormatError("weight store has no 'single.meta' record")
    meta = np.asarray(meta, dtype=np.float64)
    return SingleNucConfig(
        depth=int(meta[0]), width=int(meta[1]), kernel=int(meta[2]),
        eps_gain=float(meta[3]), gray_depth=int(meta[4]), offset_scale=float(meta[5]),
        t_range=(float(meta[6]), float(meta[7])), slope=float(meta[8]),
        bulk_hidden=int(meta[9]), bulk_scale=float(meta[10]),
    )


def _kaiming_dense(rng: np.random.Generator, n_in: int, n_out: int, slope: float) -> np.ndarray:
    gain = np.sqrt(2.0 / (1.0 + slope ** 2))
    bound = gain * np.sqrt(3.0 / n_in)
    return rng.uniform(-bound, bound, size=(n_in, n_out)).astype(np.float32)


def init_multi_nuc(cfg: MultiNucConfig = MultiNucConfig(), seed: int = 0) -> WeightStore:
    """Kaiming trunk, zero kernel head (uniform fusion), identity estimator."""
    rng = np.random.default_rng(seed)
    ws: WeightStore = {}
    in_ch = 3
    for i in range(cfg.depth):
        ws[f"multi.trunk{i}.w"] = nets.kaiming_conv(rng, cfg.width, in_ch, 3, cfg.slope)
        ws[f"multi.trunk{i}.b"] = np.zeros(cfg.width, dtype=np.float32)
        in_ch = cfg.width
    ws["multi.kernel.w"] = nets.zeros_conv(cfg.k * cfg.k, cfg.width, 3)
    ws["multi.kernel.b"] = np.zeros(cfg.k * cfg.k, dtype=np.float32)
    ws["multi.est.skip.w"] = np.array([[1.0]], dtype=np.float32)
    ws["multi.est.skip.b"] = np.zeros(1, dtype=np.float32)
    ws["multi.est.h.w"] = _kaiming_dense(rng, 4, cfg.est_hidden, cfg.slope)
    ws["multi.est.h.b"] = np.zeros(cfg.est_hidden, dtype=np.float32)
    ws["multi.est.out.w"] = np.zeros((cfg.est_hidden, 1), dtype=np.float32)
    ws["multi.est.out.b"] = np.zeros(1, dtype=np.float32)
    nets.meta_vector(ws, "multi.meta", [
        cfg.depth, cfg.width, cfg.k, cfg.gray_norm, cfg.est_hidden, cfg.est_scale,
        cfg.gray_depth, cfg.t_range[0], cfg.t_range[1], cfg.slope,
        1.0 if cfg.registration else 0.0,
    ])
    return ws


def multi_config_from_weights(ws: WeightStore) -> MultiNucConfig:
    meta = ws.get("multi.meta")
    if meta is None:
        raise WeightFormatError("weight store has no 'multi.meta' record")
    meta = np.asarray(meta, dtype=np.float64)
    return MultiNucConfig(
        depth=int(meta[0]), width=int(meta[1]), k=int(meta[2]), gray_norm=float(meta[3]),
        est_hidden=int(meta[4]), est_scale=float(meta[5]), gray_depth=int(meta[6]),
        t_range=(float(meta[7]), float(meta[8])), slope=float(meta[9]),
        registration=bool(meta[10] > 0.5),
    )


# ---------------------------------------------------------------------------
# single-frame forward


def _trunk(x, ws: WeightStore, prefix: str, depth: int, width: int, kernel: int, slope: float):
    pad = (kernel - 1) // 2
    h = x
    in_ch = 3
    for i in range(depth):
        w, b = conv_pair(ws, f"{prefix}.trunk{i}", width, in_ch, kernel)
        h = ad.leaky_relu(ad.conv2d(h, w, b, pad), slope)
        in_ch = width
    return h


def single_nuc_forward(gray: np.ndarray, t_amb: np.ndarray, ws: WeightStore,
                       cfg: SingleNucConfig):
    """Batched forward pass: (B, 1, H, W) gray levels to temperatures.

    Accepts a weight store of arrays (inference) or autodiff Vars (training).
    """
    gray = np.asarray(gray, dtype=np.float32)
    if gray.ndim != 4 or gray.shape[1] != 1:
        raise ContractViolationError(f"expected (B, 1, H, W) gray input, got {gray.shape}")
    bsz = gray.shape[0]
    mu = gray.mean(axis=(1, 2, 3))
    sd = gray.std(axis=(1, 2, 3))
    z = (gray - mu.reshape(bsz, 1, 1, 1)) / (sd + 1.0).reshape(bsz, 1, 1, 1)
    x = np.concatenate([
        z,
        nets.constant_channel(mu / cfg.gray_max, gray.shape),
        nets.constant_channel(nets.normalized_ambient(t_amb, cfg.t_range), gray.shape),
    ], axis=1)

    feats = _trunk(x, ws, "single", cfg.depth, cfg.width, cfg.kernel, cfg.slope)
    pad = (cfg.kernel - 1) // 2
    gw, gb = conv_pair(ws, "single.gain", 1, cfg.width, cfg.kernel)
    ow, ob = conv_pair(ws, "single.offset", 1, cfg.width, cfg.kernel)
    gain = ad.add(ad.softplus(ad.conv2d(feats, gw, gb, pad)), np.float32(cfg.eps_gain))
    local = ad.mul(ad.conv2d(feats, ow, ob, pad), np.float32(cfg.offset_gain))

    # Global offset: a scalar per frame from burst-free statistics.  Splitting
    # the bulk level from the texture head keeps per-step output motion small
    # for the conv branch while the few-parameter MLP -- whose gradient every
    # pixel agrees on -- can cross hundreds of gray levels in a short run.
    tn = nets.normalized_ambient(t_amb, cfg.t_range)
    mu_n = (mu / cfg.gray_max).astype(np.float32)
    sd_n = (sd / cfg.gray_max).astype(np.float32)
    stats = np.stack([mu_n, sd_n, tn, mu_n * tn], axis=1).astype(np.float32)
    hidden = ad.leaky_relu(
        ad.linear(stats, require(ws, "single.bulk.h.w", (4, cfg.bulk_hidden)),
                  require(ws, "single.bulk.h.b", (cfg.bulk_hidden,))),
        cfg.slope,
    )
    braw = ad.linear(hidden, require(ws, "single.bulk.out.w", (cfg.bulk_hidden, 1)),
                     require(ws, "single.bulk.out.b", (1,)))
    bulk = ad.mul(ad.reshape(braw, (bsz, 1, 1, 1)), np.float32(cfg.bulk_scale))

    offset = ad.add(local, bulk)
    return ad.div(ad.sub(gray, offset), gain)


def nuc_single(frame: GrayFrame | np.ndarray, t_amb: float | None,
               weights: WeightStore, cfg: SingleNucConfig | None = None) -> np.ndarray:
    """Estimate the temperature map behind one gray frame."""
    if isinstance(frame, GrayFrame):
        gray = frame.as_float()
        t_amb = frame.t_amb if t_amb is None else t_amb
    else:
        gray = np.asarray(frame, dtype=np.float32)
        if t_amb is None:
            raise ContractViolationError("t_amb is required for bare-array frames")
    t_amb = check_ambient(t_amb)
    if cfg is None:
        cfg = single_config_from_weights(weights)
    out = single_nuc_forward(gray[None, None], np.array([t_amb]), weights, cfg)
    return np.asarray(ad.val(out), dtype=np.float32)[0, 0]


# ---------------------------------------------------------------------------
# registration


@dataclass(frozen=True)
class RegistrationResult:
    """Integer alignment of every frame against frame 0."""

    shifts: tuple[tuple[int, int], ...]
    confidence: tuple[float, ...]


def _ncc(a: np.ndarray, b: np.ndarray) -> float:
    """Normalized cross-correlation of two equal-shape patches."""
    ac = a - a.mean()
    bc = b - b.mean()
    denom = float(np.linalg.norm(ac)) * float(np.linalg.norm(bc))
    if denom <= 1e-12:
        return 0.0
    return float(np.dot(ac.ravel(), bc.ravel()) / denom)


def register_burst(burst: Burst | np.ndarray) -> RegistrationResult:
    """Integer-shift registration of every frame against frame 0.

    Shift (dy, dx) of frame k means ``frame_k[i, j] ~= frame_0[i+dy, j+dx]``.
    Each candidate shift scores the normalized cross-correlation of the
    mean-removed overlap, so smooth temperature ramps cannot pin the peak
    at zero lag and partial overlaps are weighted fairly.  The search spans
    shifts up to a sixth of the frame (at least ±4, at most ±24); ties are
    broken toward the smallest displacement.  A constant (degenerate)
    frame gets shift (0, 0) and confidence 0.
    """
    values = burst.values() if isinstance(burst, Burst) else np.asarray(burst, dtype=np.float32)
    if values.ndim != 3:
        raise ContractViolationError(f"expected (N, H, W) frames, got shape {values.shape}")
    n, h, w = values.shape
    if n == 1:
        return RegistrationResult(((0, 0),), (1.0,))

    reach = min(24, max(4, min(h, w) // 6))
    candidates = sorted(
        ((dy, dx) for dy in range(-reach, reach + 1) for dx in range(-reach, reach + 1)),
        key=lambda s: (abs(s[0]) + abs(s[1]), s))
    f0 = values[0].astype(np.float64)
    degenerate0 = float(f0.std()) <= 1e-9
    shifts: list[tuple[int, int]] = [(0, 0)]
    confidence: list[float] = [0.0 if degenerate0 else 1.0]
    for k in range(1, n):
        fk = values[k].astype(np.float64)
        if degenerate0 or float(fk.std()) <= 1e-9:
            shifts.append((0, 0))
            confidence.append(0.0)
            continue
        best, best_score = (0, 0), -np.inf
        for dy, dx in candidates:
            i0, i1 = max(0, -dy), min(h, h - dy)
            j0, j1 = max(0, -dx), min(w, w - dx)
            if (i1 - i0) * (j1 - j0) < 16:
                continue
            score = _ncc(f0[i0 + dy:i1 + dy, j0 + dx:j1 + dx], fk[i0:i1, j0:j1])
            if score > best_score:
                best, best_score = (dy, dx), score
        shifts.append(best)
        confidence.append(float(max(0.0, min(1.0, best_score))))
    return RegistrationResult(tuple(shifts), tuple(confidence))


def _shift_edge(frame: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Translate a frame by (dy, dx), replicating border content."""
    h, w = frame.shape
    ys = np.clip(np.arange(h) - dy, 0, h - 1)
    xs = np.clip(np.arange(w) - dx, 0, w - 1)
    return frame[np.ix_(ys, xs)]


def _canonical_frames(values: np.ndarray, cfg: MultiNucConfig) -> np.ndarray:
    """Register, align, and canonically order the non-reference frames.

    Ordering by (dy, dx, mean) makes the forward pass independent of the
    order frames arrive in (up to exact duplicates, which are symmetric
    anyway).
    """
    n = values.shape[0]
    if n == 1:
        return values
    if cfg.registration:
        reg = register_burst(values)
        aligned = np.stack([
            _shift_edge(values[k], *reg.shifts[k]) for k in range(n)
        ])
        dys = np.array([s[0] for s in reg.shifts[1:]])
        dxs = np.array([s[1] for s in reg.shifts[1:]])
    else:
        aligned = values
        dys = np.zeros(n - 1)
        dxs = np.zeros(n - 1)
    means = aligned[1:].mean(axis=(1, 2))
    order = 1 + np.lexsort((means, dxs, dys))
    return aligned[np.concatenate([[0], order])]


# ---------------------------------------------------------------------------
# multiframe forward


def _estimator_forward(mu: np.ndarray, sd: np.ndarray, t_amb: np.ndarray,
                       ws: WeightStore, cfg: MultiNucConfig):
    """Scene-mean temperature from burst statistics, (B, 1) output.

    An affine skip on ``mu / gray_norm`` anchors the estimate at the physical
    prior (gray ~ °C for a unit-gain camera); a small MLP on normalized
    statistics learns the ambient-dependent correction, scaled so AdamW can
    cover hundreds of °C of offset within a desk-scale run.
    """
    bsz = mu.shape[0]
    tn = nets.normalized_ambient(t_amb, cfg.t_range)
    mu_n = (mu / (cfg.gray_norm * 100.0)).astype(np.float32)
    sd_n = (sd / (cfg.gray_norm * 100.0)).astype(np.float32)
    stats_phys = (mu / cfg.gray_norm).astype(np.float32).reshape(bsz, 1)
    stats_norm = np.stack([mu_n, sd_n, tn, mu_n * tn], axis=1).astype(np.float32)

    skip = ad.linear(stats_phys, require(ws, "multi.est.skip.w", (1, 1)),
                     require(ws, "multi.est.skip.b", (1,)))
    hidden = ad.leaky_relu(
        ad.linear(stats_norm, require(ws, "multi.est.h.w", (4, cfg.est_hidden)),
                  require(ws, "multi.est.h.b", (cfg.est_hidden,))),
        cfg.slope,
    )
    corr = ad.linear(hidden, require(ws, "multi.est.out.w", (cfg.est_hidden, 1)),
                     require(ws, "multi.est.out.b", (1,)))
    return ad.add(skip, ad.mul(corr, np.float32(cfg.est_scale)))


def estimate_mean_temp(burst: Burst | np.ndarray, t_amb: float | None,
                       weights: WeightStore, cfg: MultiNucConfig | None = None) -> float:
    """Scalar scene-mean temperature estimate for a burst."""
    if isinstance(burst, Burst):
        values = burst.values()
        t_amb = burst.t_amb if t_amb is None else t_amb
    else:
        values = np.asarray(burst, dtype=np.float32)
    if cfg is None:
        cfg = multi_config_from_weights(weights)
    t_amb = check_ambient(t_amb)
    mu = np.array([values.mean()], dtype=np.float32)
    sd = np.array([values.std()], dtype=np.float32)
    out = _estimator_forward(mu, sd, np.array([t_amb]), weights, cfg)
    return float(np.asarray(ad.val(out))[0, 0])


def multi_nuc_forward(values: np.ndarray, t_amb: np.ndarray, ws: WeightStore,
                      cfg: MultiNucConfig, return_parts: bool = False):
    """Batched multiframe forward: (B, N, H, W) bursts to (B, 1, H, W) maps."""
    values = np.asarray(values, dtype=np.float32)
    if values.ndim != 4:
        raise ContractViolationError(f"expected (B, N, H, W) bursts, got {values.shape}")
    bsz, n, h, w = values.shape
    mu = values.mean(axis=(1, 2, 3))
    sd = values.std(axis=(1, 2, 3))

    aligned = np.stack([_canonical_frames(values[b], cfg) for b in range(bsz)])
    centered = (aligned - mu.reshape(bsz, 1, 1, 1)) / np.float32(cfg.gray_norm)

    z = (aligned - mu.reshape(bsz, 1, 1, 1)) / (sd + 1.0).reshape(bsz, 1, 1, 1)
    per_frame = z.reshape(bsz * n, 1, h, w)
    mu_ch = nets.constant_channel(np.repeat(mu / cfg.gray_max, n), per_frame.shape)
    t_ch = nets.constant_channel(
        np.repeat(nets.normalized_ambient(t_amb, cfg.t_range), n), per_frame.shape)
    x = np.concatenate([per_frame, mu_ch, t_ch], axis=1)

    feats = _trunk(x, ws, "multi", cfg.depth, cfg.width, 3, cfg.slope)
    kw, kb = conv_pair(ws, "multi.kernel", cfg.k * cfg.k, cfg.width, 3)
    logits = ad.conv2d(feats, kw, kb, 1)                       # (B*N, k^2, H, W)
    logits = ad.reshape(logits, (bsz, n * cfg.k * cfg.k, h, w))
    weights_taps = ad.reshape(ad.softmax(logits, axis=1), (bsz, n, cfg.k * cfg.k, h, w))

    p = (cfg.k - 1) // 2
    padded = np.pad(centered, ((0, 0), (0, 0), (p, p), (p, p)), mode="edge")
    fused = ad.fused_taps(weights_taps, padded, cfg.k)          # (B, H, W)

    t_mean = _estimator_forward(mu, sd, np.asarray(t_amb), ws, cfg)   # (B, 1)
    out = ad.add(fused, ad.reshape(t_mean, (bsz, 1, 1)))
    out = ad.reshape(out, (bsz, 1, h, w))
    if return_parts:
        return out, {"fused": fused, "t_mean": t_mean, "centered": centered,
                     "weights": weights_taps, "aligned": aligned}
    return out


def nuc_multi(burst: Burst | np.ndarray, t_amb: float | None,
              weights: WeightStore, cfg: MultiNucConfig | None = None) -> np.ndarray:
    """Estimate the temperature map behind a burst of gray frames."""
    if isinstance(burst, Burst):
        values = burst.values()
        t_amb = burst.t_amb if t_amb is None else t_amb
    else:
        values = np.asarray(burst, dtype=np.float32)
        if values.ndim == 2:
            values = values[None]
    if t_amb is None:
        raise ContractViolationError("t_amb is required for bare-array bursts")
    t_amb = check_ambient(t_amb)
    if cfg is None:
        cfg = multi_config_from_weights(weights)
    out = multi_nuc_forward(values[None], np.array([t_amb]), weights, cfg)
    return np.asarray(ad.val(out), dtype=np.float32)[0, 0]
