"""Camera forward model, analytic inversion, and parameter serialization."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import identity_params, make_rng, radial_params, rand_map
from thermopipe.camera import (
    CameraParams,
    GrayFrame,
    check_ambient,
    flat_field_correct,
    gain_map,
    invert_ideal,
    load_camera_params,
    offset_map,
    params_from_text,
    params_to_text,
    save_camera_params,
    simulate_frame,
)
from thermopipe.errors import (
    CameraParameterError,
    ContractViolationError,
    SaturationWarning,
)


def random_admissible_params(rng: np.random.Generator, noise: float = 0.0) -> CameraParams:
    """Draw camera parameters that pass admissibility checks."""
    # Offsets stay non-negative over t_amb in [0, 50] so noise-free frames of
    # 10-70 degC scenes never clamp (the round-trip bound assumes no saturation).
    g0 = float(rng.uniform(0.8, 4.0))
    g1 = float(rng.uniform(-0.002, 0.002))
    d0 = float(rng.uniform(100.0, 800.0))
    d1 = float(rng.uniform(-2.0, 6.0))
    r1 = float(rng.uniform(-0.1, 0.0))
    r2 = float(rng.uniform(-0.05, 0.0))
    return CameraParams(
        gain_poly=(g0, g1),
        offset_poly=(d0, d1),
        radial_profile=(1.0, r1, r2),
        noise_sigma=noise,
        seed=int(rng.integers(0, 2**31)),
        gray_depth=14,
    )


# ---------------------------------------------------------------------------
# gain_map / offset_map
# ---------------------------------------------------------------------------


def test_gain_map_identity_params():
    p = CameraParams((1.0,), (0.0,), (1.0,), 0.0, 0, 14)
    np.testing.assert_array_equal(gain_map(p, 25.0, (5, 7)), np.ones((5, 7)))


def test_gain_map_radial_example():
    # Profile 1 - 0.1 r^2 with nominal gain 2: centre pixel 2.0, corners at
    # r = sqrt(2) give 2 * (1 - 0.1 * 2) = 1.6.
    p = CameraParams((2.0,), (0.0,), (1.0, 0.0, -0.1), 0.0, 0, 14)
    g = gain_map(p, 25.0, (5, 5))
    assert g[2, 2] == pytest.approx(2.0, abs=1e-12)
    for y, x in ((0, 0), (0, 4), (4, 0), (4, 4)):
        assert g[y, x] == pytest.approx(1.6, abs=1e-9)


def test_gain_map_tamb_polynomial():
    p = CameraParams((1.05, -0.002), (0.0,), (1.0,), 0.0, 0, 14)
    np.testing.assert_allclose(gain_map(p, 0.0, (3, 3)), 1.05)
    np.testing.assert_allclose(gain_map(p, 50.0, (3, 3)), 0.95)


def test_offset_map_examples():
    z = CameraParams((1.0,), (0.0,), (1.0,), 0.0, 0, 14)
    np.testing.assert_array_equal(offset_map(z, 30.0, (4, 4)), np.zeros((4, 4)))
    c = CameraParams((1.0,), (100.0,), (1.0,), 0.0, 0, 14)
    np.testing.assert_allclose(offset_map(c, 30.0, (4, 4)), 100.0)


def test_maps_rotation_symmetric():
    rng = make_rng(42)
    for _ in range(5):
        p = random_admissible_params(rng)
        t_amb = float(rng.uniform(0.0, 50.0))
        for dims in ((9, 9), (8, 8), (6, 10)):
            g = gain_map(p, t_amb, dims)
            d = offset_map(p, t_amb, dims)
            np.testing.assert_allclose(g, np.rot90(g, 2), atol=1e-6)
            np.testing.assert_allclose(d, np.rot90(d, 2), atol=1e-6)


def test_gain_strictly_positive():
    rng = make_rng(43)
    for _ in range(5):
        p = random_admissible_params(rng)
        assert gain_map(p, float(rng.uniform(0, 50)), (16, 16)).min() > 0


# ---------------------------------------------------------------------------
# simulate_frame / invert_ideal
# ---------------------------------------------------------------------------


def test_simulate_identity_camera():
    frame = simulate_frame(np.full((6, 6), 30.0, np.float32), 25.0, identity_params())
    assert frame.values.dtype == np.uint16
    np.testing.assert_array_equal(frame.values, np.full((6, 6), 30, np.uint16))
    assert frame.t_amb == 25.0


def test_simulate_affine_example():
    p = CameraParams((2.0,), (100.0,), (1.0,), 0.0, 0, 14)
    frame = simulate_frame(np.full((4, 4), 25.0, np.float32), 25.0, p)
    np.testing.assert_array_equal(frame.values, np.full((4, 4), 150, np.uint16))
    recovered = invert_ideal(frame, 25.0, p)
    np.testing.assert_allclose(recovered, 25.0, atol=1e-6)


def test_roundtrip_quantization_bound():
    rng = make_rng(44)
    for _ in range(20):
        p = random_admissible_params(rng)
        t_amb = float(rng.uniform(0.0, 50.0))
        t = rand_map(rng, 24, 32)
        frame = simulate_frame(t, t_amb, p, frame_index=0)
        g_min = gain_map(p, t_amb, t.shape).min()
        err = np.abs(invert_ideal(frame, t_amb, p) - t).max()
        assert err <= 0.5 / g_min + 1e-6


def test_monotonicity_in_temperature():
    rng = make_rng(45)
    p = random_admissible_params(rng)
    t = rand_map(rng, 12, 12, 20.0, 40.0)
    lo = simulate_frame(t, 25.0, p).values.astype(np.int64)
    hi = simulate_frame(t + 5.0, 25.0, p).values.astype(np.int64)
    assert (hi > lo).all()


def test_noise_determinism_and_keying():
    p = CameraParams((1.0,), (100.0,), (1.0,), 2.0, seed=7, gray_depth=14)
    t = np.full((8, 8), 30.0, np.float32)
    a = simulate_frame(t, 25.0, p, frame_index=3)
    b = simulate_frame(t, 25.0, p, frame_index=3)
    c = simulate_frame(t, 25.0, p, frame_index=4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    p2 = CameraParams((1.0,), (100.0,), (1.0,), 2.0, seed=8, gray_depth=14)
    d = simulate_frame(t, 25.0, p2, frame_index=3)
    assert not np.array_equal(a.values, d.values)


def test_noise_statistics():
    p = CameraParams((1.0,), (1000.0,), (1.0,), 2.0, seed=11, gray_depth=14)
    t = np.full((64, 64), 500.0, np.float32)
    frame = simulate_frame(t, 25.0, p)
    resid = frame.values.astype(np.float64) - 1500.0
    assert abs(resid.mean()) < 0.2
    assert 1.7 < resid.std() < 2.3


def test_saturation_warning():
    p = identity_params()
    with pytest.warns(SaturationWarning):
        frame = simulate_frame(np.full((8, 8), 1e6, np.float32), 25.0, p)
    assert frame.values.max() == 2**14 - 1
    with pytest.warns(SaturationWarning):
        frame = simulate_frame(np.full((8, 8), -1e6, np.float32), 25.0, p)
    assert frame.values.min() == 0


def test_invert_accepts_raw_array():
    p = CameraParams((2.0,), (100.0,), (1.0,), 0.0, 0, 14)
    vals = np.full((3, 3), 150.0, np.float32)
    np.testing.assert_allclose(invert_ideal(vals, 25.0, p), 25.0, atol=1e-6)


def test_ambient_range_enforced():
    assert check_ambient(25.0) == 25.0
    with pytest.raises(ContractViolationError):
        check_ambient(999.0)
    with pytest.raises(ContractViolationError):
        check_ambient(float("nan"))


# ---------------------------------------------------------------------------
# flat_field_correct
# ---------------------------------------------------------------------------


def test_flat_field_uniform_reference_is_identity(rng):
    p = identity_params()
    frame = simulate_frame(rand_map(rng, 8, 8), 25.0, p)
    ref = GrayFrame(np.full((8, 8), 200, np.uint16), 25.0, 14)
    out = flat_field_correct(frame, ref)
    np.testing.assert_array_equal(out.values, frame.values)


def test_flat_field_self_reference_is_uniform(rng):
    vals = (rng.integers(100, 200, size=(8, 8))).astype(np.uint16)
    f = GrayFrame(vals, 25.0, 14)
    out = flat_field_correct(f, f)
    mean = float(vals.astype(np.float64).mean())
    assert np.abs(out.values.astype(np.float64) - mean).max() <= 1.0


def test_flat_field_removes_fixed_pattern(rng):
    pattern = rng.integers(-30, 30, size=(8, 8)).astype(np.float64)
    base = np.full((8, 8), 500.0)
    frame = GrayFrame(np.clip(base + pattern, 0, 16383).astype(np.uint16), 25.0, 14)
    ref = GrayFrame(np.clip(300.0 + pattern, 0, 16383).astype(np.uint16), 25.0, 14)
    out = flat_field_correct(frame, ref)
    resid = out.values.astype(np.float64) - out.values.astype(np.float64).mean()
    assert np.abs(resid).max() <= 1.0


# ---------------------------------------------------------------------------
# CameraParams validation and serialization
# ---------------------------------------------------------------------------


def test_params_reject_nonpositive_gain():
    with pytest.raises(CameraParameterError):
        CameraParams((-1.0,), (0.0,), (1.0,), 0.0, 0, 14)
    with pytest.raises(CameraParameterError):
        CameraParams((1.0, -1.0), (0.0,), (1.0,), 0.0, 0, 14)


def test_params_reject_bad_radial():
    with pytest.raises(CameraParameterError):
        CameraParams((1.0,), (0.0,), (0.5,), 0.0, 0, 14)  # not 1 at centre
    with pytest.raises(CameraParameterError):
        CameraParams((1.0,), (0.0,), (1.0, -1.0), 0.0, 0, 14)  # negative at corner


def test_params_reject_bad_noise_and_depth():
    with pytest.raises(CameraParameterError):
        CameraParams((1.0,), (0.0,), (1.0,), -1.0, 0, 14)
    with pytest.raises(CameraParameterError):
        CameraParams((1.0,), (0.0,), (1.0,), 0.0, 0, 99)


def test_params_text_roundtrip(rng):
    p = random_admissible_params(make_rng(46), noise=1.5)
    text = params_to_text(p)
    q = params_from_text(text)
    assert p == q


def test_params_file_roundtrip(tmp_path):
    p = radial_params(noise_sigma=2.0, seed=5)
    path = tmp_path / "cam.txt"
    save_camera_params(path, p)
    assert load_camera_params(path) == p


def test_params_from_text_rejects_garbage():
    with pytest.raises(CameraParameterError):
        params_from_text("not a params file")
    with pytest.raises(CameraParameterError):
        params_from_text("gain_poly = 1.0\n")  # missing keys
    good = params_to_text(identity_params())
    with pytest.raises(CameraParameterError):
        params_from_text(good + "\ngain_poly = abc")
