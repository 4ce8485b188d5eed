"""Burst synthesis: crops, motion bounds, and shift-compare oracles."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import identity_params, make_rng, radial_params, rand_map
from thermopipe.burst import Burst, FrameMotion, MotionConfig, default_motion, synth_burst
from thermopipe.camera import CameraParams, GrayFrame, simulate_frame
from thermopipe.errors import ContractViolationError


def test_default_motion_dimensions():
    cfg = default_motion(64, 64)
    assert (cfg.height, cfg.width) == (48, 48)
    assert cfg.max_shift == 7
    assert cfg.max_deg > 0 and cfg.max_px > 0

    small = default_motion(16, 24)
    assert (small.height, small.width) == (8, 16)

    with pytest.raises(ContractViolationError):
        default_motion(15, 15)


def test_single_frame_zero_motion_equals_center_crop(rng):
    t = rand_map(rng, 20, 24)
    p = radial_params(noise_sigma=1.5, seed=3)
    cfg = MotionConfig(height=12, width=16, max_shift=0)
    burst = synth_burst(t, 25.0, 1, cfg, p)
    assert len(burst) == 1
    assert burst.motions[0].is_identity
    y0, x0 = (20 - 12) // 2, (24 - 16) // 2
    direct = simulate_frame(t[y0 : y0 + 12, x0 : x0 + 16], 25.0, p, frame_index=0)
    np.testing.assert_array_equal(burst.frames[0].values, direct.values)


def test_zero_motion_zero_noise_frames_identical(rng):
    t = rand_map(rng, 20, 20)
    cfg = MotionConfig(height=12, width=12, max_shift=0)
    burst = synth_burst(t, 25.0, 7, cfg, identity_params())
    for frame in burst.frames[1:]:
        np.testing.assert_array_equal(frame.values, burst.frames[0].values)
    assert all(m.is_identity for m in burst.motions)


def test_integer_translations_shift_exactly(rng):
    # Flat radial profile: the fixed pattern is uniform, so a pure integer
    # crop shift moves scene content without changing per-pixel response.
    t = rand_map(rng, 32, 32)
    p = identity_params()
    cfg = MotionConfig(height=20, width=20, max_shift=3)
    burst = synth_burst(t, 25.0, 5, cfg, p, seed=9)
    ref = burst.frames[0].values.astype(np.int64)
    moved = False
    for k in range(1, 5):
        m = burst.motions[k]
        assert m.angle_deg == 0.0
        assert all(j == (0.0, 0.0) for j in m.corner_jitter)
        cur = burst.frames[k].values.astype(np.int64)
        h, w = cur.shape
        ys = slice(max(0, m.dy), min(h, h + m.dy))
        xs = slice(max(0, m.dx), min(w, w + m.dx))
        ys0 = slice(max(0, -m.dy), min(h, h - m.dy))
        xs0 = slice(max(0, -m.dx), min(w, w - m.dx))
        np.testing.assert_array_equal(cur[ys0, xs0], ref[ys, xs])
        moved = moved or (m.dy, m.dx) != (0, 0)
    assert moved


def test_frame_zero_is_reference(rng):
    t = rand_map(rng, 24, 24)
    cfg = MotionConfig(height=14, width=14, max_shift=2, max_deg=1.0, max_px=0.25)
    burst = synth_burst(t, 30.0, 4, cfg, identity_params(), seed=1)
    assert burst.motions[0].is_identity
    assert len(burst.motions) == 4
    assert burst.true_map is not None


def test_burst_determinism_and_seed_sensitivity(rng):
    t = rand_map(rng, 24, 24)
    p = identity_params(noise_sigma=1.0, seed=2)
    cfg = MotionConfig(height=14, width=14, max_shift=3, max_deg=0.5, max_px=0.2)
    a = synth_burst(t, 25.0, 4, cfg, p, seed=5)
    b = synth_burst(t, 25.0, 4, cfg, p, seed=5)
    c = synth_burst(t, 25.0, 4, cfg, p, seed=6)
    for fa, fb in zip(a.frames, b.frames):
        np.testing.assert_array_equal(fa.values, fb.values)
    assert a.motions == b.motions
    assert a.motions != c.motions


def test_frame_index_base_decorrelates_noise(rng):
    t = rand_map(rng, 20, 20)
    p = identity_params(noise_sigma=2.0, seed=4)
    cfg = MotionConfig(height=12, width=12, max_shift=0)
    a = synth_burst(t, 25.0, 2, cfg, p, frame_index_base=0)
    b = synth_burst(t, 25.0, 2, cfg, p, frame_index_base=100)
    assert not np.array_equal(a.frames[0].values, b.frames[0].values)


def test_map_must_exceed_output_dims(rng):
    t = rand_map(rng, 12, 12)
    with pytest.raises(ContractViolationError):
        synth_burst(t, 25.0, 1, MotionConfig(height=12, width=12), identity_params())


def test_motion_reach_must_fit_margin(rng):
    t = rand_map(rng, 20, 20)
    # margin is 2 px; a 30-degree rotation of a 16x16 crop reaches ~5.5 px.
    cfg = MotionConfig(height=16, width=16, max_shift=0, max_deg=30.0)
    with pytest.raises(ContractViolationError):
        synth_burst(t, 25.0, 3, cfg, identity_params())


def test_burst_validation(rng):
    f1 = GrayFrame(np.zeros((4, 4), np.uint16), 25.0, 14)
    f2 = GrayFrame(np.zeros((4, 5), np.uint16), 25.0, 14)
    f3 = GrayFrame(np.zeros((4, 4), np.uint16), 30.0, 14)
    with pytest.raises(ContractViolationError):
        Burst([], 25.0)
    with pytest.raises(ContractViolationError):
        Burst([f1, f2], 25.0)
    with pytest.raises(ContractViolationError):
        Burst([f1, f3], 25.0)


def test_motion_config_validation():
    with pytest.raises(ContractViolationError):
        MotionConfig(height=0, width=8)
    with pytest.raises(ContractViolationError):
        MotionConfig(height=8, width=8, max_shift=-1)
    with pytest.raises(ContractViolationError):
        MotionConfig(height=8, width=8, max_deg=-0.5)


def test_burst_values_stack(rng):
    t = rand_map(rng, 20, 20)
    burst = synth_burst(t, 25.0, 3, MotionConfig(height=12, width=12, max_shift=2), identity_params())
    vals = burst.values()
    assert vals.shape == (3, 12, 12)
    assert vals.dtype == np.float32
