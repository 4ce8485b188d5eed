"""Input-validation helpers.

Every public entry point funnels its array arguments through these checks so
that shape and finiteness errors surface as :class:`ContractViolationError`
with a readable message instead of a numpy broadcasting accident later on.
"""
from __future__ import annotations

import numpy as np

from .errors import ContractViolationError

_FLOAT_DTYPES = (np.float32, np.float64)


def check_grid2d(x: np.ndarray, name: str = "grid") -> np.ndarray:
    """Validate a 2-D real-valued map (H, W) with H, W >= 1 and finite values."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ContractViolationError(f"{name}: expected a 2-D array, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ContractViolationError(f"{name}: dimensions must be >= 1, got {x.shape}")
    if x.dtype not in _FLOAT_DTYPES:
        x = x.astype(np.float32)
    if not np.all(np.isfinite(x)):
        raise ContractViolationError(f"{name}: values must be finite")
    return x


def check_tensor3(x: np.ndarray, name: str = "tensor") -> np.ndarray:
    """Validate a channel-first 3-D array (C, H, W).

    C == 0 is legal (an empty channel stack); H and W must be >= 1 when any
    channel is present.
    """
    x = np.asarray(x)
    if x.ndim != 3:
        raise ContractViolationError(f"{name}: expected a 3-D array (C, H, W), got shape {x.shape}")
    c, h, w = x.shape
    if c > 0 and (h < 1 or w < 1):
        raise ContractViolationError(f"{name}: spatial dimensions must be >= 1, got {x.shape}")
    if x.dtype not in _FLOAT_DTYPES:
        x = x.astype(np.float32)
    if x.size and not np.all(np.isfinite(x)):
        raise ContractViolationError(f"{name}: values must be finite")
    return x


def check_finite(x: np.ndarray, name: str = "array") -> np.ndarray:
    x = np.asarray(x)
    if x.size and not np.all(np.isfinite(x)):
        raise ContractViolationError(f"{name}: values must be finite")
    return x


def check_scalar(value: float, name: str, lo: float | None = None, hi: float | None = None) -> float:
    """Validate a finite scalar, optionally within [lo, hi]."""
    value = float(value)
    if not np.isfinite(value):
        raise ContractViolationError(f"{name}: must be finite, got {value}")
    if lo is not None and value < lo:
        raise ContractViolationError(f"{name}: must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ContractViolationError(f"{name}: must be <= {hi}, got {value}")
    return value


def check_positive_int(value: int, name: str, minimum: int = 1) -> int:
    if int(value) != value or int(value) < minimum:
        raise ContractViolationError(f"{name}: must be an integer >= {minimum}, got {value!r}")
    return int(value)
