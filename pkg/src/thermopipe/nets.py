"""Shared network plumbing: weight stores, initialization, feature channels.

A weight store is a plain ``dict[str, np.ndarray]`` (float32) whose keys
name the layers; the binary weight-file format serializes exactly this
structure.  Forward passes validate presence and shape of every record they
use, so a store saved for one configuration fails loudly on another.
"""
from __future__ import annotations

import numpy as np

from .errors import WeightFormatError

WeightStore = dict


def require(ws: WeightStore, name: str, shape: tuple) -> np.ndarray:
    """Fetch a named weight and insist on its shape."""
    if name not in ws:
        raise WeightFormatError(f"weight store is missing record {name!r}")
    arr = ws[name]
    if tuple(arr.shape) != tuple(shape):
        raise WeightFormatError(
            f"weight {name!r} has shape {tuple(arr.shape)}, expected {tuple(shape)}"
        )
    return arr


def kaiming_conv(rng: np.random.Generator, out_ch: int, in_ch: int, k: int,
                 slope: float) -> np.ndarray:
    """Kaiming-uniform fan-in initialization for a conv weight."""
    fan_in = in_ch * k * k
    gain = np.sqrt(2.0 / (1.0 + slope ** 2))
    bound = gain * np.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=(out_ch, in_ch, k, k)).astype(np.float32)


def zeros_conv(out_ch: int, in_ch: int, k: int) -> np.ndarray:
    return np.zeros((out_ch, in_ch, k, k), dtype=np.float32)


def conv_pair(ws: WeightStore, prefix: str, out_ch: int, in_ch: int, k: int):
    """The (weights, bias) records of one conv layer, shape-checked."""
    return (require(ws, prefix + ".w", (out_ch, in_ch, k, k)),
            require(ws, prefix + ".b", (out_ch,)))


def constant_channel(values: np.ndarray, like_shape: tuple) -> np.ndarray:
    """Broadcast per-sample scalars (B,) into a (B, 1, H, W) feature channel."""
    b, _, h, w = like_shape
    out = np.empty((b, 1, h, w), dtype=np.float32)
    out[:] = np.asarray(values, dtype=np.float32).reshape(b, 1, 1, 1)
    return out


def normalized_ambient(t_amb: np.ndarray, t_range: tuple[float, float]) -> np.ndarray:
    """Map ambient temperatures onto [0, 1] over the operating envelope."""
    lo, hi = t_range
    return (np.asarray(t_amb, dtype=np.float32) - lo) / (hi - lo)


def meta_vector(ws: WeightStore, name: str, values: list[float]) -> None:
    ws[name] = np.asarray(values, dtype=np.float32)


def float32_store(ws: WeightStore) -> WeightStore:
    """Coerce all records to float32 (the on-disk dtype)."""
    return {k: np.asarray(v, dtype=np.float32) for k, v in ws.items()}
