"""Synthetic ground-truth temperature maps for desk-scale experiments.

Two families: generic smooth scenes (gradients + Gaussian blobs + fine
band-limited texture, so gray-level quantization dithers rather than
plateaus) and canopy-like scenes (cool vegetation patches over warm soil)
whose water-stress index is meaningful.
"""
from __future__ import annotations

import numpy as np

from .ops import _resample_nchw
from .validation import check_positive_int

__all__ = ["smooth_scene", "canopy_scene", "ramp_scene", "scene_set"]


def _band_limited_texture(h: int, w: int, rng: np.random.Generator,
                          amplitude: float, coarseness: int = 4) -> np.ndarray:
    """Smooth random texture: coarse white noise upsampled bicubically."""
    ch = max(2, h // coarseness)
    cw = max(2, w // coarseness)
    coarse = rng.standard_normal((ch, cw))
    fine = _resample_nchw(coarse[None, None], h, w)[0, 0]
    scale = np.abs(fine).max()
    if scale > 0:
        fine = fine / scale
    return (amplitude * fine).astype(np.float64)


def _bump_field(h: int, w: int, rng: np.random.Generator, n_bumps: int,
                amp_range: tuple[float, float]) -> np.ndarray:
    ii, jj = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    field = np.zeros((h, w))
    for _ in range(n_bumps):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        sy = rng.uniform(h / 12, h / 4)
        sx = rng.uniform(w / 12, w / 4)
        amp = rng.uniform(*amp_range) * rng.choice([-1.0, 1.0])
        field += amp * np.exp(-((ii - cy) ** 2 / (2 * sy ** 2) + (jj - cx) ** 2 / (2 * sx ** 2)))
    return field


def smooth_scene(h: int, w: int, rng: np.random.Generator,
                 t_range: tuple[float, float] = (10.0, 70.0),
                 texture: float = 1.0) -> np.ndarray:
    """A generic scene: base level, gradient, blobs, and fine texture.

    ``texture`` scales the blob and fine-texture amplitudes; values below 1
    yield gentler scenes (useful for pretraining, where per-pixel curvature
    should stay well below the quantization step).
    """
    check_positive_int(h, "height"), check_positive_int(w, "width")
    if texture < 0:
        raise ValueError("texture must be >= 0")
    lo, hi = t_range
    mid = rng.uniform(lo + 0.3 * (hi - lo), hi - 0.3 * (hi - lo))
    ii, jj = np.meshgrid(np.linspace(-0.5, 0.5, h), np.linspace(-0.5, 0.5, w), indexing="ij")
    scene = mid + rng.uniform(-12, 12) * ii + rng.uniform(-12, 12) * jj
    scene += _bump_field(h, w, rng, int(rng.integers(3, 8)),
                         (texture * 5.0, texture * 18.0))
    scene += _band_limited_texture(h, w, rng, amplitude=texture * rng.uniform(0.8, 2.0))
    return np.clip(scene, lo, hi).astype(np.float32)


def ramp_scene(h: int, w: int, rng: np.random.Generator,
               t_range: tuple[float, float] = (10.0, 70.0),
               slope_range: tuple[float, float] = (0.15, 0.4)) -> np.ndarray:
    """A tilted plane with faint large blobs: dither-friendly, low curvature.

    Every pixel sits on a slope of at least ``slope_range[0]`` °C/px, so
    quantization produces fine dither (no integer plateaus) while the
    second derivative stays far below the quantization step -- the regime
    where local averaging can recover temperatures well below the
    rounding error.
    """
    check_positive_int(h, "height"), check_positive_int(w, "width")
    lo, hi = t_range
    theta = rng.uniform(0.0, 2.0 * np.pi)
    slope = rng.uniform(*slope_range)
    ii, jj = np.meshgrid(np.arange(h, dtype=np.float64) - (h - 1) / 2,
                         np.arange(w, dtype=np.float64) - (w - 1) / 2, indexing="ij")
    plane = slope * (np.sin(theta) * ii + np.cos(theta) * jj)
    span = np.abs(plane).max()
    mid = rng.uniform(lo + span + 1.0, hi - span - 1.0) if lo + span + 1.0 < hi - span - 1.0 \
        else 0.5 * (lo + hi)
    scene = mid + plane + _bump_field(h, w, rng, 3, (0.2, 1.0))
    return np.clip(scene, lo, hi).astype(np.float32)


def canopy_scene(h: int, w: int, rng: np.random.Generator,
                 t_amb: float = 25.0) -> np.ndarray:
    """A field scene: warm soil with cooler vegetation patches.

    The coolest pixels sit several °C below ``t_amb`` so the wet reference
    stays clear of the dry reference ``t_amb + 7``.
    """
    check_positive_int(h, "height"), check_positive_int(w, "width")
    soil = t_amb + rng.uniform(8.0, 16.0) + _band_limited_texture(h, w, rng, 2.0)
    soil += _bump_field(h, w, rng, 3, (1.0, 3.0))

    # Vegetation mask: thresholded smooth noise, covering roughly half the frame.
    field = _band_limited_texture(h, w, rng, 1.0, coarseness=6)
    mask = field > np.quantile(field, rng.uniform(0.4, 0.6))
    canopy = t_amb - rng.uniform(2.0, 6.0) + _band_limited_texture(h, w, rng, 1.0)

    scene = np.where(mask, canopy, soil)
    return scene.astype(np.float32)


def scene_set(count: int, size: tuple[int, int] = (64, 64), seed: int = 0,
              kind: str = "mixed", t_range: tuple[float, float] = (10.0, 70.0),
              texture: float = 1.0) -> list[np.ndarray]:
    """A reproducible list of scenes; ``kind`` is smooth | canopy | ramp | mixed."""
    count = check_positive_int(count, "count")
    rng = np.random.default_rng(seed)
    h, w = size
    maps = []
    for i in range(count):
        if kind == "canopy" or (kind == "mixed" and i % 3 == 2):
            maps.append(canopy_scene(h, w, rng, t_amb=rng.uniform(15.0, 35.0)))
        elif kind == "ramp":
            maps.append(ramp_scene(h, w, rng, t_range))
        else:
            maps.append(smooth_scene(h, w, rng, t_range, texture=texture))
    return maps
