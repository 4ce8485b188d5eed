"""Evaluation metrics for temperature maps.

MAE, PSNR and SSIM compare maps pixel-wise or structurally; EMD compares
their value distributions via exact 1-D optimal transport on shared uniform
histograms; CWSI summarizes a canopy scene into a 0-1 water-stress index so
estimation quality can be judged on the quantity agronomists actually use.

SSIM is written in terms of the autodiff-aware ops, so the training loss can
reuse it on graph nodes while this module's public functions stay plain
numpy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ContractViolationError, DegenerateSceneError
from .validation import check_grid2d, check_scalar

__all__ = [
    "MetricsConfig",
    "Histogram",
    "TransportPlan",
    "CwsiInputs",
    "mae",
    "psnr",
    "ssim",
    "emd",
    "emd_from_histograms",
    "histogram_of",
    "cwsi",
    "cwsi_inputs",
    "cwsi_from_inputs",
    "cwsi_error",
    "frame_metrics",
]


@dataclass(frozen=True)
class MetricsConfig:
    """Shared metric constants.

    ``psnr_peak`` is the maximum representable temperature across datasets
    (also the SSIM dynamic range); the SSIM window is Gaussian.
    """

    psnr_peak: float = 90.0
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    emd_bins: int = 256

    def __post_init__(self):
        if self.psnr_peak <= 0:
            raise ContractViolationError(f"psnr_peak must be > 0, got {self.psnr_peak}")
        if self.ssim_window < 3 or self.ssim_window % 2 == 0:
            raise ContractViolationError(f"ssim_window must be odd and >= 3, got {self.ssim_window}")
        if self.ssim_sigma <= 0:
            raise ContractViolationError("ssim_sigma must be > 0")
        if self.emd_bins < 2:
            raise ContractViolationError(f"emd_bins must be >= 2, got {self.emd_bins}")


def _pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = check_grid2d(a, "first map")
    b = check_grid2d(b, "second map")
    if a.shape != b.shape:
        raise ContractViolationError(f"map dims differ: {a.shape} vs {b.shape}")
    return a.astype(np.float64, copy=False), b.astype(np.float64, copy=False)


def mae(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute difference in °C."""
    a, b = _pair(a, b)
    return float(np.abs(a - b).mean())


def psnr(a: np.ndarray, b: np.ndarray, cfg: MetricsConfig = MetricsConfig()) -> float:
    """Peak signal-to-noise ratio in dB; identical maps give +inf."""
    a, b = _pair(a, b)
    mse = float(np.square(a - b).mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(cfg.psnr_peak ** 2 / mse)


# ---------------------------------------------------------------------------
# SSIM


def _gaussian_window(window: int, sigma: float) -> np.ndarray:
    ax = np.arange(window, dtype=np.float64) - (window - 1) / 2.0
    g = np.exp(-(ax ** 2) / (2.0 * sigma ** 2))
    g /= g.sum()
    return np.outer(g, g)


def ssim_nchw(a, b, cfg: MetricsConfig = MetricsConfig(), peak: float | None = None):
    """Mean SSIM over valid Gaussian windows of (B, 1, H, W) inputs.

    Accepts autodiff Vars or arrays; returns the same kind.  ``peak``
    overrides the dynamic range (the loss uses 1.0 on normalized maps).
    """
    peak = cfg.psnr_peak if peak is None else peak
    dtype = ad.val(a).dtype
    win = _gaussian_window(cfg.ssim_window, cfg.ssim_sigma).astype(dtype)
    win = win.reshape(1, 1, cfg.ssim_window, cfg.ssim_window)
    c1 = (cfg.ssim_k1 * peak) ** 2
    c2 = (cfg.ssim_k2 * peak) ** 2

    mu_a = ad.conv2d(a, win, None, 0)
    mu_b = ad.conv2d(b, win, None, 0)
    e_aa = ad.conv2d(ad.mul(a, a), win, None, 0)
    e_bb = ad.conv2d(ad.mul(b, b), win, None, 0)
    e_ab = ad.conv2d(ad.mul(a, b), win, None, 0)

    mu_aa = ad.mul(mu_a, mu_a)
    mu_bb = ad.mul(mu_b, mu_b)
    mu_ab = ad.mul(mu_a, mu_b)
    var_a = ad.sub(e_aa, mu_aa)
    var_b = ad.sub(e_bb, mu_bb)
    cov = ad.sub(e_ab, mu_ab)

    num = ad.mul(ad.add(ad.mul(mu_ab, 2.0), c1), ad.add(ad.mul(cov, 2.0), c2))
    den = ad.mul(ad.add(ad.add(mu_aa, mu_bb), c1), ad.add(ad.add(var_a, var_b), c2))
    return ad.mean(ad.div(num, den))


def ssim(a: np.ndarray, b: np.ndarray, cfg: MetricsConfig = MetricsConfig()) -> float:
    """Mean structural similarity in [-1, 1] with a Gaussian window."""
    a, b = _pair(a, b)
    if min(a.shape) < cfg.ssim_window:
        raise ContractViolationError(
            f"maps of dims {a.shape} are smaller than the SSIM window {cfg.ssim_window}"
        )
    return float(ssim_nchw(a[None, None], b[None, None], cfg))


# ---------------------------------------------------------------------------
# EMD


@dataclass(frozen=True)
class Histogram:
    """Normalized value distribution over uniform bins."""

    bin_edges: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        masses = np.asarray(self.masses, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 3:
            raise ContractViolationError("histogram needs at least 2 bins (3 edges)")
        if masses.shape != (edges.size - 1,):
            raise ContractViolationError(
                f"expected {edges.size - 1} masses for {edges.size} edges, got {masses.shape}"
            )
        if np.any(np.diff(edges) <= 0):
            raise ContractViolationError("bin edges must be strictly increasing")
        if np.any(masses < -1e-12) or abs(masses.sum() - 1.0) > 1e-9:
            raise ContractViolationError("masses must be non-negative and sum to 1")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "masses", masses)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


@dataclass(frozen=True)
class TransportPlan:
    """Flows between two histograms; marginals must match the masses."""

    flows: np.ndarray
    source: Histogram
    target: Histogram

    def __post_init__(self):
        f = np.asarray(self.flows, dtype=np.float64)
        if f.shape != (self.source.masses.size, self.target.masses.size):
            raise ContractViolationError(f"flow matrix has shape {f.shape}")
        if np.any(f < -1e-9):
            raise ContractViolationError("flows must be non-negative")
        if not np.allclose(f.sum(axis=1), self.source.masses, atol=1e-9):
            raise ContractViolationError("row sums must equal the source masses")
        if not np.allclose(f.sum(axis=0), self.target.masses, atol=1e-9):
            raise ContractViolationError("column sums must equal the target masses")
        object.__setattr__(self, "flows", f)

    def cost(self) -> float:
        """Total transport cost with |center_i - center_j| ground distance."""
        ca, cb = self.source.centers, self.target.centers
        return float((self.flows * np.abs(ca[:, None] - cb[None, :])).sum())


def histogram_of(grid: np.ndarray, bins: int, lo: float, hi: float) -> Histogram:
    """Histogram of a map's values over [lo, hi] with uniform bins."""
    grid = check_grid2d(grid, "grid")
    if hi <= lo:
        raise ContractViolationError(f"need hi > lo, got [{lo}, {hi}]")
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(grid.astype(np.float64, copy=False).ravel(), bins=edges)
    return Histogram(edges, counts / grid.size)


def emd_from_histograms(a: Histogram, b: Histogram) -> float:
    """Exact 1-D optimal transport cost between histograms on shared bins.

    For matched uniform bins the minimal flow cost reduces to the area
    between the two CDFs: ``sum |CDF_a - CDF_b| * bin_width``.
    """
    if a.bin_edges.shape != b.bin_edges.shape or not np.allclose(a.bin_edges, b.bin_edges):
        raise ContractViolationError("histograms must share identical bin edges")
    width = a.bin_edges[1] - a.bin_edges[0]
    cdf_gap = np.cumsum(a.masses - b.masses)[:-1]
    return float(np.abs(cdf_gap).sum() * width)


def emd(a: np.ndarray, b: np.ndarray, cfg: MetricsConfig = MetricsConfig()) -> float:
    """Earth mover's distance (°C) between the value distributions of two maps.

    Histograms use ``cfg.emd_bins`` uniform bins spanning the joint value
    range of both maps; two maps with identical ranges and values give 0.
    """
    a = check_grid2d(a, "first map")
    b = check_grid2d(b, "second map")
    lo = min(float(a.min()), float(b.min()))
    hi = max(float(a.max()), float(b.max()))
    if hi == lo:
        return 0.0
    ha = histogram_of(a, cfg.emd_bins, lo, hi)
    hb = histogram_of(b, cfg.emd_bins, lo, hi)
    return emd_from_histograms(ha, hb)


# ---------------------------------------------------------------------------
# CWSI


@dataclass(frozen=True)
class CwsiInputs:
    """Reference temperatures entering the water-stress index."""

    t_plant: float
    t_wet: float
    t_dry: float

    def __post_init__(self):
        for name in ("t_plant", "t_wet", "t_dry"):
            check_scalar(getattr(self, name), name)
        if self.t_dry <= self.t_wet:
            raise DegenerateSceneError(
                f"t_dry ({self.t_dry:.2f}) must exceed t_wet ({self.t_wet:.2f})"
            )


def _coolest_mean(values: np.ndarray, fraction: float) -> float:
    k = max(1, int(round(fraction * values.size)))
    coolest = np.partition(values, k - 1)[:k]
    return float(coolest.mean())


def cwsi_inputs(t_map: np.ndarray, t_amb: float, canopy_mask: np.ndarray | None = None) -> CwsiInputs:
    """Extract (T_plant, T_wet, T_dry) from a temperature map.

    T_plant is the mean of the coolest 33% of (masked) pixels, T_wet the mean
    of the coolest 5%, and T_dry is ``t_amb + 7``.
    """
    t_map = check_grid2d(t_map, "t_map")
    t_amb = check_scalar(t_amb, "t_amb")
    if canopy_mask is not None:
        mask = np.asarray(canopy_mask, dtype=bool)
        if mask.shape != t_map.shape:
            raise ContractViolationError(
                f"mask dims {mask.shape} differ from map dims {t_map.shape}"
            )
        values = t_map[mask].astype(np.float64)
        if values.size == 0:
            raise ContractViolationError("canopy mask selects no pixels")
    else:
        values = t_map.astype(np.float64).ravel()
    return CwsiInputs(
        t_plant=_coolest_mean(values, 0.33),
        t_wet=_coolest_mean(values, 0.05),
        t_dry=t_amb + 7.0,
    )


def cwsi_from_inputs(inputs: CwsiInputs) -> float:
    """``(T_plant - T_wet) / (T_dry - T_wet)``, reported unclamped."""
    return (inputs.t_plant - inputs.t_wet) / (inputs.t_dry - inputs.t_wet)


def cwsi(t_map: np.ndarray, t_amb: float, canopy_mask: np.ndarray | None = None) -> float:
    """Crop water stress index of a temperature map."""
    return cwsi_from_inputs(cwsi_inputs(t_map, t_amb, canopy_mask))


def cwsi_error(gt_map: np.ndarray, est_map: np.ndarray, t_amb: float,
               canopy_mask: np.ndarray | None = None) -> float:
    """Absolute CWSI difference between GT and estimate, in percentage points."""
    return abs(cwsi(gt_map, t_amb, canopy_mask) - cwsi(est_map, t_amb, canopy_mask)) * 100.0


def frame_metrics(gt: np.ndarray, est: np.ndarray, t_amb: float,
                  canopy_mask: np.ndarray | None = None,
                  cfg: MetricsConfig = MetricsConfig()) -> dict:
    """All per-frame metrics as one record (the evaluation CSV row).

    Scenes whose wet/dry references collapse have no defined stress
    index; those columns come back as NaN rather than failing the frame.
    """
    try:
        cwsi_gt = cwsi(gt, t_amb, canopy_mask)
        cwsi_est = cwsi(est, t_amb, canopy_mask)
        cwsi_err = abs(cwsi_gt - cwsi_est) * 100.0
    except DegenerateSceneError:
        cwsi_gt = cwsi_est = cwsi_err = math.nan
    return {
        "mae": mae(gt, est),
        "psnr": psnr(gt, est, cfg),
        "ssim": ssim(gt, est, cfg),
        "emd": emd(gt, est, cfg),
        "cwsi_gt": cwsi_gt,
        "cwsi_est": cwsi_est,
        "cwsi_err": cwsi_err,
    }
