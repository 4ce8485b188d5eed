"""SVG report rendering for evaluation results.

For every evaluated frame pair this produces a mid-row temperature
profile (reference vs estimate) and an absolute-error map, plus one
summary chart of per-frame error — 2·F + 1 files for F frames.
"""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["profile_figure", "error_figure", "summary_figure", "render_report"]


def profile_figure(gt: np.ndarray, pred: np.ndarray, title: str):
    """Temperatures along the middle row of both maps."""
    mid = gt.shape[0] // 2
    fig, ax = plt.subplots(figsize=(6, 3.2), dpi=100)
    ax.plot(gt[mid, :], label="reference", lw=1.2)
    ax.plot(pred[mid, :], label="estimate", lw=1.2, ls="--")
    ax.set_xlabel("column")
    ax.set_ylabel("temperature [°C]")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def error_figure(gt: np.ndarray, pred: np.ndarray, title: str):
    """Absolute per-pixel error as an image."""
    err = np.abs(pred.astype(np.float64) - gt.astype(np.float64))
    fig, ax = plt.subplots(figsize=(4.4, 3.6), dpi=100)
    im = ax.imshow(err, cmap="magma", interpolation="nearest")
    fig.colorbar(im, ax=ax, label="|error| [°C]")
    ax.set_title(title)
    ax.set_xticks([]), ax.set_yticks([])
    fig.tight_layout()
    return fig


def summary_figure(ids: list[str], maes: list[float]):
    """Per-frame MAE bars with the dataset mean marked."""
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * len(ids) + 2), 3.2), dpi=100)
    ax.bar(range(len(ids)), maes, color="#30618c")
    if maes:
        ax.axhline(float(np.mean(maes)), color="#c23b22", lw=1.0,
                   label=f"mean {np.mean(maes):.3f} °C")
        ax.legend(fontsize=8)
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels(ids, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("MAE [°C]")
    ax.set_title("per-frame error")
    fig.tight_layout()
    return fig


def render_report(pairs: dict[str, tuple[np.ndarray, np.ndarray]],
                  maes: dict[str, float], out_dir: str) -> list[str]:
    """Write all figures as SVG; returns the created paths in order."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for frame_id in sorted(pairs):
        gt, pred = pairs[frame_id]
        for suffix, fig in (("profile", profile_figure(gt, pred, frame_id)),
                            ("error", error_figure(gt, pred, frame_id))):
            path = os.path.join(out_dir, f"{frame_id}_{suffix}.svg")
            fig.savefig(path, format="svg")
            plt.close(fig)
            written.append(path)
    ids = sorted(pairs)
    fig = summary_figure(ids, [maes[i] for i in ids])
    path = os.path.join(out_dir, "summary.svg")
    fig.savefig(path, format="svg")
    plt.close(fig)
    written.append(path)
    return written
