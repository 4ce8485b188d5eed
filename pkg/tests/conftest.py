"""Shared fixtures and helpers for the thermopipe test suite."""

from __future__ import annotations

import numpy as np
import pytest

from thermopipe.camera import CameraParams


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic RNG for randomized-but-reproducible tests."""
    return np.random.default_rng(seed)


def identity_params(noise_sigma: float = 0.0, seed: int = 0) -> CameraParams:
    """A camera whose gray levels equal scene temperature (unit gain, zero offset)."""
    return CameraParams(
        gain_poly=(1.0,),
        offset_poly=(0.0,),
        radial_profile=(1.0,),
        noise_sigma=noise_sigma,
        seed=seed,
        gray_depth=14,
    )


def drift_params(noise_sigma: float = 0.0, seed: int = 0) -> CameraParams:
    """A near-unity-gain camera with ambient-driven gain/offset drift.

    Over t_amb in [0, 50]: gain 1.05 -> 0.95 (about +/-5%), offset 500 -> 100
    gray levels (about +/-200 around the midpoint).
    """
    return CameraParams(
        gain_poly=(1.05, -0.002),
        offset_poly=(500.0, -8.0),
        radial_profile=(1.0,),
        noise_sigma=noise_sigma,
        seed=seed,
        gray_depth=14,
    )


def radial_params(noise_sigma: float = 0.0, seed: int = 0) -> CameraParams:
    """A camera with a non-trivial radial falloff profile."""
    return CameraParams(
        gain_poly=(2.0, -0.004),
        offset_poly=(300.0, 4.0),
        radial_profile=(1.0, -0.05, -0.02),
        noise_sigma=noise_sigma,
        seed=seed,
        gray_depth=14,
    )


def rand_map(rng: np.random.Generator, h: int, w: int, lo: float = 10.0, hi: float = 70.0) -> np.ndarray:
    """Random float32 temperature map with values in [lo, hi]."""
    return rng.uniform(lo, hi, size=(h, w)).astype(np.float32)


@pytest.fixture()
def rng() -> np.random.Generator:
    return make_rng(1234)
