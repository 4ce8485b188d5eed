"""Thermal-camera model: gray levels from scene temperatures and back.

The camera maps a scene temperature ``T`` to a gray level through the affine
model ``L = G(t_amb) * T + D(t_amb)`` where gain and offset drift with the
camera's ambient temperature and share an axis-symmetric radial profile
across the detector.  Frames are quantized to ``gray_depth`` bits inside a
16-bit container, with optional Gaussian read noise from a counter-based
generator so that every (seed, frame, pixel) triple is reproducible.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import CameraParameterError, ContractViolationError, SaturationWarning
from .validation import check_grid2d, check_scalar

# Operating envelope for the ambient temperature, in °C.
AMBIENT_RANGE = (-20.0, 70.0)
# Range over which the gain polynomial must stay strictly positive.
GAIN_POSITIVITY_RANGE = (-10.0, 60.0)

_MAX_POLY_DEGREE = 3


@dataclass(frozen=True)
class CameraParams:
    """Admissible description of one simulated camera.

    ``gain_poly`` and ``offset_poly`` are polynomial coefficients in
    *ascending* order over the ambient temperature (gray/°C and gray).
    ``radial_profile`` is a polynomial in the normalized radius
    ``r = sqrt(u^2 + v^2)`` where u, v are pixel offsets from the frame
    centre scaled per-axis to [-1, 1] (so r spans [0, sqrt(2)] with the
    corners at exactly sqrt(2)); it multiplies both gain and offset and must
    equal 1 at the centre.
    """

    gain_poly: tuple[float, ...] = (1.0,)
    offset_poly: tuple[float, ...] = (0.0,)
    radial_profile: tuple[float, ...] = (1.0,)
    noise_sigma: float = 0.0
    seed: int = 0
    gray_depth: int = 14

    def __post_init__(self):
        object.__setattr__(self, "gain_poly", _as_poly(self.gain_poly, "gain_poly"))
        object.__setattr__(self, "offset_poly", _as_poly(self.offset_poly, "offset_poly"))
        object.__setattr__(self, "radial_profile", _as_poly(self.radial_profile, "radial_profile"))
        if not np.isfinite(self.noise_sigma) or self.noise_sigma < 0:
            raise CameraParameterError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise CameraParameterError("seed must fit in an unsigned 64-bit integer")
        if not 8 <= int(self.gray_depth) <= 16:
            raise CameraParameterError(
                f"gray_depth must be in [8, 16] (16-bit container), got {self.gray_depth}"
            )
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "gray_depth", int(self.gray_depth))

        ts = np.linspace(*GAIN_POSITIVITY_RANGE, 256)
        if np.min(npoly.polyval(ts, self.gain_poly)) <= 0:
            raise CameraParameterError(
                f"gain_poly must be strictly positive over T_amb in {GAIN_POSITIVITY_RANGE}"
            )
        if abs(npoly.polyval(0.0, self.radial_profile) - 1.0) > 1e-9:
            raise CameraParameterError("radial_profile must equal 1 at r = 0 (centre-normalized)")
        rs = np.linspace(0.0, np.sqrt(2.0), 256)
        if np.min(npoly.polyval(rs, self.radial_profile)) <= 0:
            raise CameraParameterError("radial_profile must stay strictly positive on [0, sqrt(2)]")

    @property
    def gray_max(self) -> int:
        return (1 << self.gray_depth) - 1


def _as_poly(coeffs, name: str) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
    if arr.ndim != 1 or arr.size < 1 or arr.size > _MAX_POLY_DEGREE + 1:
        raise CameraParameterError(
            f"{name}: expected 1 to {_MAX_POLY_DEGREE + 1} coefficients, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise CameraParameterError(f"{name}: coefficients must be finite")
    return tuple(float(c) for c in arr)


@dataclass
class GrayFrame:
    """One camera frame: quantized gray levels plus the ambient temperature."""

    values: np.ndarray
    t_amb: float
    gray_depth: int = 14

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ContractViolationError(f"frame values must be 2-D, got shape {v.shape}")
        self.values = v.astype(np.uint16, copy=False)
        self.t_amb = check_scalar(self.t_amb, "t_amb", *AMBIENT_RANGE)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def as_float(self) -> np.ndarray:
        """Gray levels as float32, the working dtype of the networks."""
        return self.values.astype(np.float32)


def check_ambient(t_amb: float) -> float:
    return check_scalar(t_amb, "t_amb", *AMBIENT_RANGE)


def _radius_grid(dims: tuple[int, int]) -> np.ndarray:
    h, w = dims
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    u = (np.arange(h, dtype=np.float64) - cy) / (cy if cy > 0 else 1.0)
    v = (np.arange(w, dtype=np.float64) - cx) / (cx if cx > 0 else 1.0)
    return np.sqrt(u[:, None] ** 2 + v[None, :] ** 2)


def _radial_map(params: CameraParams, dims: tuple[int, int]) -> np.ndarray:
    return npoly.polyval(_radius_grid(dims), params.radial_profile)


def gain_map(params: CameraParams, t_amb: float, dims: tuple[int, int]) -> np.ndarray:
    """Per-pixel gain (gray/°C) at the given ambient temperature.

    ``G[i, j] = gain_poly(t_amb) * radial(r_ij)``; strictly positive by
    parameter admissibility, re-checked on the evaluated map.
    """
    t_amb = check_ambient(t_amb)
    _check_dims(dims)
    g = npoly.polyval(t_amb, params.gain_poly) * _radial_map(params, dims)
    if np.min(g) <= 0:
        raise CameraParameterError("evaluated gain map is not strictly positive")
    return g.astype(np.float32)


def offset_map(params: CameraParams, t_amb: float, dims: tuple[int, int]) -> np.ndarray:
    """Per-pixel offset (gray) at the given ambient temperature."""
    t_amb = check_ambient(t_amb)
    _check_dims(dims)
    d = npoly.polyval(t_amb, params.offset_poly) * _radial_map(params, dims)
    return d.astype(np.float32)


def _check_dims(dims) -> None:
    if len(dims) != 2 or dims[0] < 1 or dims[1] < 1:
        raise ContractViolationError(f"dims must be (H, W) with H, W >= 1, got {dims}")


def _read_noise(shape: tuple[int, int], sigma: float, seed: int, frame_index: int) -> np.ndarray:
    """Gaussian noise from a counter-based generator.

    A Philox stream is keyed by (seed, frame_index) and pixel ``p`` consumes
    the raw words at positions ``p`` and ``n + p``, so the value at each
    (seed, frame, pixel) triple is independent of generation order.
    """
    n = shape[0] * shape[1]
    key = np.array([seed, frame_index], dtype=np.uint64)
    raw = np.random.Philox(key=key).random_raw(2 * n)
    u1 = ((raw[:n] >> np.uint64(11)) | np.uint64(1)) * 2.0 ** -53   # (0, 1]
    u2 = (raw[n:] >> np.uint64(11)) * 2.0 ** -53                     # [0, 1)
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return (sigma * z).reshape(shape)


def simulate_frame(true_map: np.ndarray, t_amb: float, params: CameraParams,
                   frame_index: int = 0) -> GrayFrame:
    """Render a ground-truth temperature map into a quantized gray frame.

    ``L = G * T + D + noise``, clamped to ``[0, 2^depth - 1]`` and rounded to
    integers.  A :class:`SaturationWarning` is emitted when more than 1% of
    pixels get clamped.
    """
    t = check_grid2d(true_map, "true_map").astype(np.float64, copy=False)
    t_amb = check_ambient(t_amb)
    dims = t.shape
    radial = _radial_map(params, dims)
    levels = npoly.polyval(t_amb, params.gain_poly) * radial * t \
        + npoly.polyval(t_amb, params.offset_poly) * radial
    if params.noise_sigma > 0:
        levels = levels + _read_noise(dims, params.noise_sigma, params.seed, frame_index)
    gray_max = params.gray_max
    clamped = (levels < 0) | (levels > gray_max)
    if clamped.mean() > 0.01:
        warnings.warn(
            f"{clamped.mean():.1%} of pixels clamped to [0, {gray_max}]",
            SaturationWarning,
            stacklevel=2,
        )
    quantized = np.rint(np.clip(levels, 0, gray_max)).astype(np.uint16)
    return GrayFrame(quantized, t_amb, params.gray_depth)


def invert_ideal(frame: GrayFrame | np.ndarray, t_amb: float | None, params: CameraParams) -> np.ndarray:
    """Analytic inverse of the camera model: ``T = (L - D) / G``.

    Exact for noise-free, unsaturated frames up to quantization.  ``t_amb``
    may be None when ``frame`` is a :class:`GrayFrame` carrying its own.
    """
    if isinstance(frame, GrayFrame):
        gray = frame.as_float()
        if t_amb is None:
            t_amb = frame.t_amb
    else:
        gray = check_grid2d(frame, "frame").astype(np.float32, copy=False)
        if t_amb is None:
            raise ContractViolationError("t_amb is required when frame is a bare array")
    g = gain_map(params, t_amb, gray.shape)
    d = offset_map(params, t_amb, gray.shape)
    return ((gray - d) / g).astype(np.float32)


def flat_field_correct(frame: GrayFrame, reference: GrayFrame) -> GrayFrame:
    """One-point correction: subtract the reference's fixed pattern.

    ``out = frame - (reference - mean(reference))``, re-quantized and clamped
    to the frame's gray range.  A reference captured on a uniform target
    carries the detector's fixed-pattern offset; subtracting its mean-removed
    version cancels that pattern without shifting the frame's overall level.
    """
    if frame.shape != reference.shape:
        raise ContractViolationError(
            f"frame and reference dims differ: {frame.shape} vs {reference.shape}"
        )
    ref = reference.as_float()
    corrected = frame.as_float() - (ref - ref.mean())
    gray_max = (1 << frame.gray_depth) - 1
    out = np.rint(np.clip(corrected, 0, gray_max)).astype(np.uint16)
    return GrayFrame(out, frame.t_amb, frame.gray_depth)


# ---------------------------------------------------------------------------
# text serialization (the --camera-params file format)

_FIELDS = ("gain_poly", "offset_poly", "radial_profile", "noise_sigma", "seed", "gray_depth")
_REQUIRED = ("gain_poly", "offset_poly")


def params_to_text(params: CameraParams) -> str:
    """Serialize to the flat ``key = number[,number...]`` document."""
    lines = []
    for name in _FIELDS:
        value = getattr(params, name)
        if isinstance(value, tuple):
            rendered = ",".join(repr(float(v)) for v in value)
        elif name in ("seed", "gray_depth"):
            rendered = str(int(value))
        else:
            rendered = repr(float(value))
        lines.append(f"{name} = {rendered}")
    return "\n".join(lines) + "\n"


def params_from_text(text: str) -> CameraParams:
    """Parse the flat key-value document; unknown keys are rejected."""
    fields: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CameraParameterError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise CameraParameterError(f"line {lineno}: unknown camera parameter {key!r}")
        if key in fields:
            raise CameraParameterError(f"line {lineno}: duplicate key {key!r}")
        try:
            numbers = [float(part) for part in value.strip().split(",")]
        except ValueError as exc:
            raise CameraParameterError(f"line {lineno}: {exc}") from None
        if key in ("noise_sigma",):
            fields[key] = numbers[0]
        elif key in ("seed", "gray_depth"):
            fields[key] = int(numbers[0])
        else:
            fields[key] = tuple(numbers)
    missing = [k for k in _REQUIRED if k not in fields]
    if missing:
        raise CameraParameterError(f"missing required camera parameters: {', '.join(missing)}")
    return CameraParams(**fields)


def load_camera_params(path) -> CameraParams:
    with open(path, "r", encoding="utf-8") as fh:
        return params_from_text(fh.read())


def save_camera_params(path, params: CameraParams) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(params_to_text(params))
