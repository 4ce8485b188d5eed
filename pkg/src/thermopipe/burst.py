"""Burst synthesis: short frame sequences of one scene under camera motion.

A burst holds N gray frames of the same scene at one ambient temperature.
Synthetic bursts are produced by cropping a larger ground-truth map with a
random in-margin offset, rotating, and applying a small perspective jitter —
frame 0 always uses the identity motion so it can serve as the registration
reference and supervision target.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import CameraParams, GrayFrame, check_ambient, simulate_frame
from .errors import ContractViolationError
from .validation import check_grid2d, check_positive_int

_MOTION_STREAM = 0x6D6F74696F6E  # disambiguates the motion RNG key from noise keys


@dataclass(frozen=True)
class MotionConfig:
    """Output size and motion bounds for synthetic bursts.

    ``max_shift`` bounds the integer crop offset (None means the full crop
    margin is available); ``max_deg`` bounds the rotation angle and
    ``max_px`` the perspective displacement of each corner.
    """

    height: int
    width: int
    max_shift: int | None = None
    max_deg: float = 0.0
    max_px: float = 0.0

    def __post_init__(self):
        check_positive_int(self.height, "motion height")
        check_positive_int(self.width, "motion width")
        if self.max_shift is not None and (int(self.max_shift) != self.max_shift or self.max_shift < 0):
            raise ContractViolationError(f"max_shift must be a non-negative integer, got {self.max_shift}")
        if self.max_deg < 0 or self.max_px < 0:
            raise ContractViolationError("motion bounds must be non-negative")


def default_motion(src_h: int, src_w: int) -> MotionConfig:
    """A conservative motion model for a source map of the given size.

    Trims an eighth (at least 4 px) from each border so shifts plus a
    one-degree rotation and quarter-pixel jitter stay inside the map.
    """
    margin = max(4, min(src_h, src_w) // 8)
    out_h, out_w = src_h - 2 * margin, src_w - 2 * margin
    if out_h < 8 or out_w < 8:
        raise ContractViolationError(
            f"source of {src_h}x{src_w} is too small for burst motion")
    return MotionConfig(height=out_h, width=out_w, max_shift=margin - 1,
                        max_deg=1.0, max_px=0.25)


@dataclass(frozen=True)
class FrameMotion:
    """Geometric transform of one frame relative to the scene."""

    dy: int = 0
    dx: int = 0
    angle_deg: float = 0.0
    corner_jitter: tuple = ((0.0, 0.0),) * 4

    @property
    def is_identity(self) -> bool:
        return (self.dy == 0 and self.dx == 0 and self.angle_deg == 0.0
                and all(j == (0.0, 0.0) for j in self.corner_jitter))


@dataclass
class Burst:
    """Ordered frames of one scene sharing an ambient temperature."""

    frames: list[GrayFrame]
    t_amb: float
    true_map: np.ndarray | None = None
    motions: list[FrameMotion] = field(default_factory=list)

    def __post_init__(self):
        if len(self.frames) < 1:
            raise ContractViolationError("a burst needs at least one frame")
        dims = self.frames[0].shape
        for k, frame in enumerate(self.frames):
            if frame.shape != dims:
                raise ContractViolationError(
                    f"frame {k} has dims {frame.shape}, expected {dims}"
                )
            if frame.t_amb != self.frames[0].t_amb:
                raise ContractViolationError("all frames of a burst must share t_amb")
        self.t_amb = check_ambient(self.t_amb)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames[0].shape

    def values(self) -> np.ndarray:
        """All frames stacked as a (N, H, W) float32 array."""
        return np.stack([f.as_float() for f in self.frames])


def _rotation(angle_deg: float) -> np.ndarray:
    a = np.deg2rad(angle_deg)
    return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])


def _homography_from_corners(dst: np.ndarray, src: np.ndarray) -> np.ndarray:
    """Solve the 3x3 homography mapping each dst corner (y, x) to src."""
    rows, rhs = [], []
    for (y, x), (ys, xs) in zip(dst, src):
        rows.append([y, x, 1, 0, 0, 0, -y * ys, -x * ys])
        rhs.append(ys)
        rows.append([0, 0, 0, y, x, 1, -y * xs, -x * xs])
        rhs.append(xs)
    h = np.linalg.solve(np.asarray(rows, dtype=np.float64), np.asarray(rhs, dtype=np.float64))
    return np.append(h, 1.0).reshape(3, 3)


def _sample_grid(motion: FrameMotion, out_dims: tuple[int, int],
                 src_dims: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Source (y, x) coordinates for every output pixel of one frame."""
    h, w = out_dims
    y0 = (src_dims[0] - h) // 2
    x0 = (src_dims[1] - w) // 2
    corners = np.array([(0, 0), (0, w - 1), (h - 1, 0), (h - 1, w - 1)], dtype=np.float64)
    centre = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    rot = _rotation(motion.angle_deg)
    src_corners = (corners - centre) @ rot.T + centre
    src_corners += np.array([y0 + motion.dy, x0 + motion.dx], dtype=np.float64)
    src_corners += np.asarray(motion.corner_jitter, dtype=np.float64)
    hom = _homography_from_corners(corners, src_corners)

    jj, ii = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    denom = hom[2, 0] * ii + hom[2, 1] * jj + hom[2, 2]
    ys = (hom[0, 0] * ii + hom[0, 1] * jj + hom[0, 2]) / denom
    xs = (hom[1, 0] * ii + hom[1, 1] * jj + hom[1, 2]) / denom
    return ys, xs


def _bilinear(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    h, w = img.shape
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = ys - y0
    wx = xs - x0
    img = img.astype(np.float64, copy=False)
    return (img[y0, x0] * (1 - wy) * (1 - wx)
            + img[y0, x1] * (1 - wy) * wx
            + img[y1, x0] * wy * (1 - wx)
            + img[y1, x1] * wy * wx)


def synth_burst(true_map: np.ndarray, t_amb: float, n: int, motion_cfg: MotionConfig,
                params: CameraParams, seed: int | None = None,
                frame_index_base: int = 0) -> Burst:
    """Simulate an n-frame burst of a scene under random camera motion.

    The ground-truth map must be strictly larger than the output dims; the
    available crop margin must cover the worst-case motion (shift + rotation
    reach + perspective jitter), otherwise a contract violation is raised.
    ``seed`` scopes the motion sampling (defaults to the camera seed) and
    ``frame_index_base`` offsets the read-noise counter so different bursts
    from one camera draw independent noise.
    """
    t = check_grid2d(true_map, "true_map")
    t_amb = check_ambient(t_amb)
    n = check_positive_int(n, "burst length")
    h, w = motion_cfg.height, motion_cfg.width
    src_h, src_w = t.shape
    if src_h <= h or src_w <= w:
        raise ContractViolationError(
            f"true_map {t.shape} must be strictly larger than output dims ({h}, {w})"
        )
    margin_y = (src_h - h) // 2
    margin_x = (src_w - w) // 2
    max_shift = min(m for m in (motion_cfg.max_shift, margin_y, margin_x) if m is not None)

    # Worst-case reach of a corner beyond its identity position.
    radius = np.hypot((h - 1) / 2.0, (w - 1) / 2.0)
    reach = (max_shift + 2.0 * radius * np.sin(np.deg2rad(motion_cfg.max_deg) / 2.0)
             + motion_cfg.max_px)
    if reach > min(margin_y, margin_x) + 1e-9:
        raise ContractViolationError(
            f"crop margin ({margin_y}, {margin_x}) too small for motion reach {reach:.2f} px"
        )

    seed = params.seed if seed is None else int(seed)
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, _MOTION_STREAM], dtype=np.uint64)))

    frames: list[GrayFrame] = []
    motions: list[FrameMotion] = []
    for k in range(n):
        if k == 0:
            motion = FrameMotion()
        else:
            jitter = tuple(
                (float(a), float(b))
                for a, b in rng.uniform(-motion_cfg.max_px, motion_cfg.max_px, size=(4, 2))
            ) if motion_cfg.max_px > 0 else ((0.0, 0.0),) * 4
            motion = FrameMotion(
                dy=int(rng.integers(-max_shift, max_shift + 1)),
                dx=int(rng.integers(-max_shift, max_shift + 1)),
                angle_deg=float(rng.uniform(-motion_cfg.max_deg, motion_cfg.max_deg)),
                corner_jitter=jitter,
            )
        ys, xs = _sample_grid(motion, (h, w), t.shape)
        if (ys.min() < 0 or xs.min() < 0 or ys.max() > src_h - 1 or xs.max() > src_w - 1):
            raise ContractViolationError(
                f"frame {k}: sampled motion leaves the ground-truth map"
            )
        view = _bilinear(t, ys, xs).astype(np.float32)
        frames.append(simulate_frame(view, t_amb, params, frame_index=frame_index_base + k))
        motions.append(motion)
    return Burst(frames, t_amb, true_map=t, motions=motions)
