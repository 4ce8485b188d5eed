"""Nonuniformity correction: single-frame, multiframe, and registration."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import identity_params, make_rng, rand_map
from thermopipe.burst import MotionConfig, synth_burst
from thermopipe.camera import CameraParams, simulate_frame
from thermopipe.errors import ContractViolationError, WeightFormatError
from thermopipe.nuc import (
    MultiNucConfig,
    SingleNucConfig,
    estimate_mean_temp,
    init_multi_nuc,
    init_single_nuc,
    multi_config_from_weights,
    multi_nuc_forward,
    nuc_multi,
    nuc_single,
    register_burst,
    single_config_from_weights,
)


def zero_weights(ws: dict) -> dict:
    return {k: (v if k.endswith("meta") else np.zeros_like(v)) for k, v in ws.items()}


# ---------------------------------------------------------------------------
# nuc_single
# ---------------------------------------------------------------------------


def test_untrained_single_is_gray_passthrough(rng):
    # A fresh network starts at unit predicted gain and zero predicted offset,
    # so on an identity camera the estimate equals the gray frame exactly.
    ws = init_single_nuc(seed=0)
    frame = simulate_frame(rand_map(rng, 16, 16), 25.0, identity_params())
    out = nuc_single(frame, None, ws)
    np.testing.assert_array_equal(out, frame.values.astype(np.float32))


def test_single_accepts_array_with_explicit_ambient(rng):
    ws = init_single_nuc(seed=0)
    gray = rng.uniform(0, 1000, (12, 12)).astype(np.float32)
    out = nuc_single(gray, 25.0, ws)
    assert out.shape == (12, 12)
    assert np.isfinite(out).all()


def test_single_requires_some_ambient(rng):
    ws = init_single_nuc(seed=0)
    with pytest.raises(ContractViolationError):
        nuc_single(rng.uniform(0, 100, (12, 12)).astype(np.float32), None, ws)


def test_single_weight_mismatch(rng):
    ws = init_single_nuc(seed=0)
    bad = dict(ws)
    bad["single.trunk0.w"] = bad["single.trunk0.w"][:, :2]
    frame = simulate_frame(rand_map(rng, 12, 12), 25.0, identity_params())
    with pytest.raises(WeightFormatError):
        nuc_single(frame, None, bad)
    with pytest.raises(WeightFormatError):
        nuc_single(frame, None, {k: v for k, v in ws.items() if "trunk3" not in k})


def test_single_config_roundtrip():
    # Metadata travels as float32; use exactly representable reals.
    cfg = SingleNucConfig(depth=3, width=16, slope=0.125, eps_gain=0.0009765625,
                          offset_scale=16000.0)
    ws = init_single_nuc(cfg, seed=1)
    assert single_config_from_weights(ws) == cfg


def test_single_deterministic(rng):
    ws = init_single_nuc(seed=2)
    frame = simulate_frame(rand_map(rng, 12, 12), 30.0, identity_params())
    np.testing.assert_array_equal(nuc_single(frame, None, ws), nuc_single(frame, None, ws))


# ---------------------------------------------------------------------------
# register_burst
# ---------------------------------------------------------------------------


def test_register_identical_frames(rng):
    f = rand_map(rng, 20, 20)
    res = register_burst(np.stack([f, f, f]))
    assert res.shifts == ((0, 0), (0, 0), (0, 0))
    assert all(c >= 0.9 for c in res.confidence[1:])


def test_register_recovers_planted_shifts():
    # 36x36 frames give a +/-6 search reach (a sixth of the frame).
    rng = make_rng(70)
    big = rng.uniform(0.0, 100.0, (60, 60)).astype(np.float32)
    y0, x0 = 14, 14
    ref = big[y0 : y0 + 36, x0 : x0 + 36]
    frames = [ref]
    planted = [(0, 0)]
    for dy, dx in ((3, -2), (-4, 4), (0, 5), (6, 6)):
        frames.append(big[y0 + dy : y0 + dy + 36, x0 + dx : x0 + dx + 36])
        planted.append((dy, dx))
    res = register_burst(np.stack(frames))
    assert res.shifts == tuple(planted)
    # The recovered shift rolls each frame back onto the reference.
    for k in range(1, len(frames)):
        rolled = np.roll(frames[k], res.shifts[k], axis=(0, 1))
        np.testing.assert_array_equal(rolled[7:-7, 7:-7], ref[7:-7, 7:-7])


def test_register_on_noisy_simulated_burst(rng):
    scene = rand_map(rng, 48, 48)
    p = identity_params(noise_sigma=1.0, seed=9)
    cfg = MotionConfig(height=28, width=28, max_shift=4)  # within the +/-4 reach
    burst = synth_burst(scene, 25.0, 6, cfg, p, seed=17)
    res = register_burst(burst.values())
    for k, motion in enumerate(burst.motions):
        assert res.shifts[k] == (motion.dy, motion.dx)


def test_register_degenerate_scene():
    flat = np.full((3, 16, 16), 40.0, np.float32)
    res = register_burst(flat)
    assert res.shifts == ((0, 0), (0, 0), (0, 0))
    assert all(c == 0.0 for c in res.confidence[1:])


def test_register_single_frame(rng):
    res = register_burst(rand_map(rng, 12, 12)[None])
    assert res.shifts == ((0, 0),)


# ---------------------------------------------------------------------------
# estimate_mean_temp
# ---------------------------------------------------------------------------


def test_estimator_zero_weights_returns_bias(rng):
    ws = zero_weights(init_multi_nuc(seed=0))
    ws["multi.est.skip.b"] = np.array([21.5], np.float32)
    burst = rng.uniform(0, 2000, (4, 12, 12)).astype(np.float32)
    assert estimate_mean_temp(burst, 25.0, ws) == pytest.approx(21.5, abs=1e-5)


def test_estimator_frame_order_invariance(rng):
    ws = init_multi_nuc(seed=1)
    burst = rng.uniform(0, 2000, (5, 10, 10)).astype(np.float32)
    a = estimate_mean_temp(burst, 25.0, ws)
    b = estimate_mean_temp(burst[::-1].copy(), 25.0, ws)
    assert a == pytest.approx(b, abs=1e-9)


def test_estimator_untrained_identity_camera(rng):
    # The affine skip starts at identity, so the untrained estimate equals the
    # burst's mean gray level - the scene temperature under an identity camera.
    ws = init_multi_nuc(seed=2)
    frame = simulate_frame(np.full((14, 14), 30.0, np.float32), 25.0, identity_params())
    burst = np.stack([frame.values.astype(np.float32)] * 3)
    assert estimate_mean_temp(burst, 25.0, ws) == pytest.approx(30.0, abs=0.5)


# ---------------------------------------------------------------------------
# nuc_multi
# ---------------------------------------------------------------------------


def delta_kernel_weights(seed: int = 0) -> dict:
    """Zeroed multiframe net whose fusion is a centre-tap delta and whose
    mean estimator passes the burst's gray mean through unchanged."""
    ws = zero_weights(init_multi_nuc(seed=seed))
    kb = ws["multi.kernel.b"].copy()
    kb[kb.size // 2] = 60.0  # softmax saturates to an exact one-hot in float32
    ws["multi.kernel.b"] = kb
    ws["multi.est.skip.w"] = np.array([[1.0]], np.float32)
    return ws


def test_multi_delta_kernel_identity_camera(rng):
    ws = delta_kernel_weights()
    t = rand_map(rng, 16, 16)
    frame = simulate_frame(t, 25.0, identity_params())
    out = nuc_multi(frame.values.astype(np.float32)[None], 25.0, ws)
    np.testing.assert_allclose(out, frame.values.astype(np.float32), atol=1e-3)


def test_multi_duplicate_frames_invariant_to_count(rng):
    ws = init_multi_nuc(seed=3)
    frame = simulate_frame(rand_map(rng, 14, 14), 25.0, identity_params()).values.astype(np.float32)
    outs = [nuc_multi(np.stack([frame] * n), 25.0, ws) for n in (1, 3, 7)]
    np.testing.assert_allclose(outs[0], outs[1], atol=1e-4)
    np.testing.assert_allclose(outs[1], outs[2], atol=1e-4)


def test_multi_permutation_invariance(rng):
    ws = init_multi_nuc(seed=4)
    scene = rand_map(rng, 40, 40)
    p = identity_params(noise_sigma=1.0, seed=5)
    burst = synth_burst(scene, 25.0, 6, MotionConfig(height=24, width=24, max_shift=4), p, seed=6)
    vals = burst.values()
    base = nuc_multi(vals, 25.0, ws)
    perm = np.concatenate([vals[:1], vals[1:][::-1]])
    swapped = nuc_multi(perm, 25.0, ws)
    np.testing.assert_allclose(base, swapped, atol=1e-4)


def test_multi_kernel_weights_normalized_and_convex(rng):
    ws = init_multi_nuc(seed=7)
    cfg = multi_config_from_weights(ws)
    vals = rng.uniform(0, 2000, (2, 3, 12, 12)).astype(np.float32)
    t_amb = np.array([25.0, 30.0], np.float32)
    out, parts = multi_nuc_forward(vals, t_amb, ws, cfg, return_parts=True)
    taps = np.asarray(parts["weights"].value if hasattr(parts["weights"], "value") else parts["weights"])
    sums = taps.sum(axis=(1, 2))
    np.testing.assert_allclose(sums, 1.0, atol=1e-6)
    # Convexity: each fused value lies within the centered taps' range.
    centered = parts["centered"]
    fused = np.asarray(parts["fused"].value if hasattr(parts["fused"], "value") else parts["fused"])
    assert (fused <= centered.max(axis=(1, 2, 3)).reshape(-1, 1, 1) + 1e-4).all()
    assert (fused >= centered.min(axis=(1, 2, 3)).reshape(-1, 1, 1) - 1e-4).all()


def test_multi_accepts_burst_object(rng):
    ws = init_multi_nuc(seed=8)
    scene = rand_map(rng, 36, 36)
    burst = synth_burst(scene, 25.0, 3, MotionConfig(height=20, width=20, max_shift=3),
                        identity_params(), seed=11)
    out = nuc_multi(burst, None, ws)
    assert out.shape == (20, 20)
    assert np.isfinite(out).all()


def test_multi_config_roundtrip():
    cfg = MultiNucConfig(depth=3, width=16, k=3, slope=0.125)
    ws = init_multi_nuc(cfg, seed=9)
    assert multi_config_from_weights(ws) == cfg


def test_multi_weight_mismatch(rng):
    ws = init_multi_nuc(seed=10)
    vals = rng.uniform(0, 100, (2, 12, 12)).astype(np.float32)
    with pytest.raises(WeightFormatError):
        nuc_multi(vals, 25.0, {k: v for k, v in ws.items() if "kernel" not in k})


def test_multi_registration_toggle(rng):
    # With registration disabled, a shifted burst degrades (frames are fused
    # unaligned) while the registered path stays consistent.
    scene = rand_map(rng, 40, 40)
    burst = synth_burst(scene, 25.0, 5, MotionConfig(height=24, width=24, max_shift=4),
                        identity_params(), seed=12)
    vals = burst.values()
    ws_on = init_multi_nuc(MultiNucConfig(registration=True), seed=13)
    ws_off = init_multi_nuc(MultiNucConfig(registration=False), seed=13)
    assert multi_config_from_weights(ws_on).registration is True
    assert multi_config_from_weights(ws_off).registration is False
    out_on = nuc_multi(vals, 25.0, ws_on)
    out_off = nuc_multi(vals, 25.0, ws_off)
    assert out_on.shape == out_off.shape == (24, 24)
