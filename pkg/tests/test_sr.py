"""Super-resolution head: skip identity, shapes, and residual structure."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import make_rng, rand_map
from thermopipe.errors import ContractViolationError, WeightFormatError
from thermopipe.ops import (
    ConvKernel,
    bicubic_resample,
    concat_channels,
    conv2d,
    leaky_relu,
    pixel_shuffle,
)
from thermopipe.sr import (
    SrConfig,
    init_sr,
    residual_block,
    sr_config_from_weights,
    sr_forward,
    sr_net_forward,
)


def zeroed(ws: dict) -> dict:
    """All conv weights and biases set to zero (metadata preserved)."""
    return {k: (v if k.endswith("meta") else np.zeros_like(v)) for k, v in ws.items()}


def randomized(ws: dict, rng: np.random.Generator, scale: float = 0.05) -> dict:
    return {
        k: (v if k.endswith("meta") else rng.normal(0.0, scale, v.shape).astype(np.float32))
        for k, v in ws.items()
    }


def test_zero_weights_equal_bicubic(rng):
    for s in (2, 4):
        ws = zeroed(init_sr(SrConfig(scale=s), seed=0))
        for _ in range(5):
            t = rand_map(rng, int(rng.integers(12, 24)), int(rng.integers(12, 24)))
            out = sr_forward(t, ws, s=s)
            np.testing.assert_allclose(out, bicubic_resample(t, s), atol=1e-6)


def test_untrained_init_equals_bicubic(rng):
    # The fusion layer starts at zero, so a fresh network is exactly its skip.
    ws = init_sr(SrConfig(scale=2), seed=3)
    t = rand_map(rng, 16, 20)
    np.testing.assert_array_equal(sr_forward(t, ws), bicubic_resample(t, 2))


def test_constant_input_zero_weights():
    ws = zeroed(init_sr(SrConfig(scale=2), seed=0))
    t = np.full((10, 12), 20.0, np.float32)
    out = sr_forward(t, ws, s=2)
    assert out.shape == (20, 24)
    np.testing.assert_allclose(out, 20.0, atol=1e-5)


def test_residual_equals_network_branch(rng):
    # Recompute the network branch from core primitives and check that
    # sr_forward minus its bicubic skip equals exactly that branch.
    cfg = SrConfig(scale=2)
    ws = randomized(init_sr(cfg, seed=1), make_rng(60))
    t = rand_map(rng, 14, 14)
    out = sr_forward(t, ws, s=2)

    lo, hi = cfg.t_range
    x = ((t - lo) / (hi - lo)).astype(np.float32)[None]
    feats = leaky_relu(
        conv2d(x, ConvKernel(ws["sr.feat.w"], ws["sr.feat.b"], 1)), cfg.slope
    )
    y = feats
    for i in range(cfg.blocks):
        y = residual_block(
            y,
            (
                ws[f"sr.block{i}.c1.w"],
                ws[f"sr.block{i}.c1.b"],
                ws[f"sr.block{i}.c2.w"],
                ws[f"sr.block{i}.c2.b"],
            ),
            slope=cfg.slope,
        )
    lanes = concat_channels(pixel_shuffle(y, 2), pixel_shuffle(feats, 2))
    branch = conv2d(lanes, ConvKernel(ws["sr.fusion.w"], ws["sr.fusion.b"], 1))[0]
    want = branch * (hi - lo) + bicubic_resample(t, 2)
    np.testing.assert_allclose(out, want, atol=1e-4)


def test_output_shape_exactness():
    rng = make_rng(61)
    for s in (2, 4):
        ws = zeroed(init_sr(SrConfig(scale=s), seed=0))
        for _ in range(4):
            h = int(rng.integers(8, 30))
            w = int(rng.integers(8, 30))
            out = sr_forward(rand_map(rng, h, w), ws, s=s)
            assert out.shape == (s * h, s * w)


def test_output_finite(rng):
    ws = randomized(init_sr(SrConfig(scale=2), seed=2), make_rng(62), scale=0.2)
    out = sr_forward(rand_map(rng, 16, 16), ws, s=2)
    assert np.isfinite(out).all()


def test_scale_mismatch_rejected(rng):
    ws = init_sr(SrConfig(scale=2), seed=0)
    with pytest.raises(WeightFormatError):
        sr_forward(rand_map(rng, 12, 12), ws, s=4)


def test_config_roundtrip():
    # Metadata is stored in float32, so pick a slope exactly representable.
    cfg = SrConfig(scale=4, channels=16, blocks=2, slope=0.125)
    ws = init_sr(cfg, seed=5)
    assert sr_config_from_weights(ws) == cfg


def test_config_validation():
    with pytest.raises(ContractViolationError):
        SrConfig(scale=3)  # only 2 and 4 supported
    with pytest.raises(ContractViolationError):
        SrConfig(scale=4, channels=12)  # channels must divide by s^2


# ---------------------------------------------------------------------------
# residual_block
# ---------------------------------------------------------------------------


def block_weights(rng: np.random.Generator, c: int, zero: bool = False, zero_bias: bool = False):
    if zero:
        w1 = np.zeros((c, c, 3, 3), np.float32)
        w2 = np.zeros((c, c, 3, 3), np.float32)
    else:
        w1 = rng.normal(0, 0.1, (c, c, 3, 3)).astype(np.float32)
        w2 = rng.normal(0, 0.1, (c, c, 3, 3)).astype(np.float32)
    b = np.zeros(c, np.float32) if (zero or zero_bias) else rng.normal(0, 0.1, c).astype(np.float32)
    return (w1, b.copy(), w2, b.copy())


def test_residual_block_zero_weights_identity(rng):
    x = rng.normal(size=(4, 6, 6)).astype(np.float32)
    w = block_weights(make_rng(63), 4, zero=True)
    np.testing.assert_array_equal(residual_block(x, w), x)


def test_residual_block_stacking_identity(rng):
    x = rng.normal(size=(4, 6, 6)).astype(np.float32)
    w = block_weights(make_rng(64), 4, zero=True)
    out = x
    for _ in range(4):
        out = residual_block(out, w)
    np.testing.assert_array_equal(out, x)


def test_residual_subpath_linear_for_zero_bias(rng):
    # With zero bias and positive inputs the activation is linear, so the
    # conv sub-path (block output minus the skip) obeys superposition.
    w = block_weights(make_rng(65), 3, zero_bias=True)
    w = (np.abs(w[0]), w[1], w[2], w[3])  # keep pre-activation positive
    x = np.abs(rng.normal(size=(3, 6, 6))).astype(np.float32) + 0.1
    y = np.abs(rng.normal(size=(3, 6, 6))).astype(np.float32) + 0.1
    fx = residual_block(x, w) - x
    fy = residual_block(y, w) - y
    fxy = residual_block(x + y, w) - (x + y)
    np.testing.assert_allclose(fxy, fx + fy, atol=1e-4)


def test_residual_block_channel_mismatch(rng):
    x = rng.normal(size=(3, 6, 6)).astype(np.float32)
    w = block_weights(make_rng(66), 4)
    with pytest.raises(ContractViolationError):
        residual_block(x, w)


def test_residual_block_preserves_dims(rng):
    x = rng.normal(size=(5, 7, 9)).astype(np.float32)
    w = block_weights(make_rng(67), 5)
    assert residual_block(x, w).shape == x.shape
