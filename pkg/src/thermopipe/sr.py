"""Temperature-map super-resolution with a two-lane pixel-shuffle network.

Features extracted from the low-resolution map follow two routes: one
through a stack of residual blocks (all spatial work stays at LR cost), one
shuffled up directly.  Both lanes are pixel-shuffled to the target size,
concatenated, and fused into a single residual channel that is added to a
bicubic upscale of the input — so the network only ever learns the detail
the fixed interpolator misses, and zero weights reproduce bicubic exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import nets
from .errors import ContractViolationError, WeightFormatError
from .nets import WeightStore, conv_pair
from .ops import ConvKernel, conv2d, leaky_relu
from .validation import check_grid2d, check_tensor3

__all__ = ["SrConfig", "init_sr", "sr_forward", "sr_net_forward", "residual_block"]

# Temperature normalization range (°C) for the network input; the residual
# output is scaled back by the range width, never shifted, so the bicubic
# skip stays exact for zero weights.
T_RANGE = (-10.0, 120.0)


@dataclass(frozen=True)
class SrConfig:
    """Hyper-parameters of the super-resolution head."""

    scale: int = 2
    channels: int = 32
    blocks: int = 4
    kernel: int = 3
    t_range: tuple[float, float] = T_RANGE
    slope: float = 0.1

    def __post_init__(self):
        if self.scale not in (2, 4):
            raise ContractViolationError(f"scale must be 2 or 4, got {self.scale}")
        if self.channels % (self.scale ** 2) != 0:
            raise ContractViolationError(
                f"channels ({self.channels}) must be divisible by s^2 ({self.scale ** 2})"
            )
        if self.kernel % 2 == 0:
            raise ContractViolationError("kernel size must be odd (same-padding)")
        if self.t_range[1] <= self.t_range[0]:
            raise ContractViolationError("t_range must be increasing")


def init_sr(cfg: SrConfig = SrConfig(), seed: int = 0) -> WeightStore:
    """Kaiming feature/residual convs; zero fusion so the net starts at bicubic."""
    rng = np.random.default_rng(seed)
    ws: WeightStore = {}
    ws["sr.feat.w"] = nets.kaiming_conv(rng, cfg.channels, 1, cfg.kernel, cfg.slope)
    ws["sr.feat.b"] = np.zeros(cfg.channels, dtype=np.float32)
    for i in range(cfg.blocks):
        ws[f"sr.block{i}.c1.w"] = nets.kaiming_conv(rng, cfg.channels, cfg.channels, cfg.kernel, cfg.slope)
        ws[f"sr.block{i}.c1.b"] = np.zeros(cfg.channels, dtype=np.float32)
        ws[f"sr.block{i}.c2.w"] = nets.kaiming_conv(rng, cfg.channels, cfg.channels, cfg.kernel, cfg.slope)
        ws[f"sr.block{i}.c2.b"] = np.zeros(cfg.channels, dtype=np.float32)
    lane_ch = 2 * (cfg.channels // cfg.scale ** 2)
    ws["sr.fusion.w"] = nets.zeros_conv(1, lane_ch, cfg.kernel)
    ws["sr.fusion.b"] = np.zeros(1, dtype=np.float32)
    nets.meta_vector(ws, "sr.meta", [
        cfg.scale, cfg.channels, cfg.blocks, cfg.kernel,
        cfg.t_range[0], cfg.t_range[1], cfg.slope,
    ])
    return ws


def sr_config_from_weights(ws: WeightStore) -> SrConfig:
    meta = ws.get("sr.meta")
    if meta is None:
        raise WeightFormatError("weight store has no 'sr.meta' record")
    meta = np.asarray(meta, dtype=np.float64)
    return SrConfig(
        scale=int(meta[0]), channels=int(meta[1]), blocks=int(meta[2]), kernel=int(meta[3]),
        t_range=(float(meta[4]), float(meta[5])), slope=float(meta[6]),
    )


def sr_net_forward(t_map, ws: WeightStore, cfg: SrConfig):
    """Batched forward pass: (B, 1, h, w) temperature maps to (B, 1, sh, sw).

    Accepts arrays or autodiff Vars for both the input and the weights.
    """
    shape = ad.val(t_map).shape
    if len(shape) != 4 or shape[1] != 1:
        raise ContractViolationError(f"expected (B, 1, h, w) input, got {shape}")
    h, w = shape[2], shape[3]
    s = cfg.scale
    lo, hi = cfg.t_range
    span = np.float32(hi - lo)
    pad = (cfg.kernel - 1) // 2

    x = ad.mul(ad.sub(t_map, np.float32(lo)), np.float32(1.0) / span)
    fw, fb = conv_pair(ws, "sr.feat", cfg.channels, 1, cfg.kernel)
    feats = ad.leaky_relu(ad.conv2d(x, fw, fb, pad), cfg.slope)

    y = feats
    for i in range(cfg.blocks):
        w1, b1 = conv_pair(ws, f"sr.block{i}.c1", cfg.channels, cfg.channels, cfg.kernel)
        w2, b2 = conv_pair(ws, f"sr.block{i}.c2", cfg.channels, cfg.channels, cfg.kernel)
        inner = ad.conv2d(ad.leaky_relu(ad.conv2d(y, w1, b1, pad), cfg.slope), w2, b2, pad)
        y = ad.add(y, inner)

    lane_a = ad.pixel_shuffle(y, s)
    lane_b = ad.pixel_shuffle(feats, s)
    lane_ch = 2 * (cfg.channels // s ** 2)
    uw, ub = conv_pair(ws, "sr.fusion", 1, lane_ch, cfg.kernel)
    residual = ad.conv2d(ad.concat([lane_a, lane_b], axis=1), uw, ub, pad)

    skip = ad.resample(t_map, h * s, w * s)
    return ad.add(ad.mul(residual, span), skip)


def sr_forward(t_map: np.ndarray, weights: WeightStore, s: int | None = None,
               cfg: SrConfig | None = None) -> np.ndarray:
    """Super-resolve one (h, w) temperature map to (s*h, s*w)."""
    t_map = check_grid2d(t_map, "t_map").astype(np.float32, copy=False)
    if cfg is None:
        cfg = sr_config_from_weights(weights)
    if s is not None and s != cfg.scale:
        raise WeightFormatError(
            f"weights were built for scale {cfg.scale}, requested {s}"
        )
    out = sr_net_forward(t_map[None, None], weights, cfg)
    return np.asarray(ad.val(out), dtype=np.float32)[0, 0]


def residual_block(x: np.ndarray, weights: tuple, slope: float = 0.1) -> np.ndarray:
    """One residual unit on a (C, H, W) tensor: ``x + conv(act(conv(x)))``.

    ``weights`` is ``(w1, b1, w2, b2)``; both convs are same-padded and must
    preserve the channel count.
    """
    x = check_tensor3(x, "residual_block input")
    w1, b1, w2, b2 = weights
    w1, w2 = np.asarray(w1), np.asarray(w2)
    if w1.shape[0] != w1.shape[1] or w2.shape[0] != w2.shape[1] or w1.shape[0] != x.shape[0]:
        raise ContractViolationError(
            "residual_block convs must preserve the input channel count"
        )
    k1 = ConvKernel(w1, np.asarray(b1), padding=(w1.shape[2] - 1) // 2)
    k2 = ConvKernel(w2, np.asarray(b2), padding=(w2.shape[2] - 1) // 2)
    return x + conv2d(leaky_relu(conv2d(x, k1), slope), k2)
