"""Minimal self-describing binary formats plus CSV helpers.

Frame files (magic ``TIR1``) carry one gray-level or temperature image
with its ambient temperature in the header (NaN when absent).  Weight
files (magic ``TWT1``) carry named float32 arrays.  Both formats are
little-endian, fully specified here, and round-trip bit-exactly.  All
writes go through a temp-file rename so readers never see partial files.
"""
from __future__ import annotations

import csv
import math
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .camera import GrayFrame
from .errors import FrameFormatError, WeightFormatError
from .validation import check_grid2d

__all__ = [
    "FrameRecord", "save_gray", "save_temp", "load_frame",
    "save_weights", "load_weights", "write_csv", "read_csv",
    "save_train_log", "load_train_log",
]

FRAME_MAGIC = b"TIR1"
WEIGHTS_MAGIC = b"TWT1"
_KIND_GRAY = 0
_KIND_TEMP = 1


def _atomic_write(path: str, payload: bytes) -> None:
    """Write via a sibling temp file and rename, so writes are all-or-nothing."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class FrameRecord:
    """Decoded frame file: gray counts or temperatures plus header t_amb."""

    kind: str                    # "gray" | "temp"
    values: np.ndarray           # (H, W); uint16 for gray, float32 for temp
    t_amb: float | None

    def to_gray_frame(self, gray_depth: int = 14) -> GrayFrame:
        if self.kind != "gray":
            raise FrameFormatError("not a gray-level frame")
        if self.t_amb is None:
            raise FrameFormatError("frame header carries no ambient temperature")
        return GrayFrame(values=self.values, t_amb=self.t_amb, gray_depth=gray_depth)


def _encode_frame(kind: int, values: np.ndarray, t_amb: float | None) -> bytes:
    h, w = values.shape
    header = FRAME_MAGIC + struct.pack("<BIIf", kind, h, w,
                                       math.nan if t_amb is None else float(t_amb))
    return header + values.tobytes(order="C")


def save_gray(path: str, frame: GrayFrame) -> None:
    """Write a gray-level frame (kind 0, uint16 payload)."""
    _atomic_write(path, _encode_frame(_KIND_GRAY,
                                      frame.values.astype("<u2"), frame.t_amb))


def save_temp(path: str, values: np.ndarray, t_amb: float | None = None) -> None:
    """Write a temperature map (kind 1, float32 payload)."""
    values = check_grid2d(values, "values").astype("<f4")
    _atomic_write(path, _encode_frame(_KIND_TEMP, values, t_amb))


def load_frame(path: str) -> FrameRecord:
    """Read a frame file; raises :class:`FrameFormatError` on any defect."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 17:
        raise FrameFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    if blob[:4] != FRAME_MAGIC:
        raise FrameFormatError(f"{path}: bad magic {blob[:4]!r}")
    kind, h, w, t_amb = struct.unpack("<BIIf", blob[4:17])
    if kind not in (_KIND_GRAY, _KIND_TEMP):
        raise FrameFormatError(f"{path}: unknown kind byte {kind}")
    if h < 1 or w < 1:
        raise FrameFormatError(f"{path}: degenerate dims {h}x{w}")
    dtype = np.dtype("<u2") if kind == _KIND_GRAY else np.dtype("<f4")
    expected = h * w * dtype.itemsize
    payload = blob[17:]
    if len(payload) != expected:
        raise FrameFormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}")
    values = np.frombuffer(payload, dtype=dtype).reshape(h, w).copy()
    return FrameRecord(kind="gray" if kind == _KIND_GRAY else "temp",
                       values=values,
                       t_amb=None if math.isnan(t_amb) else float(t_amb))


# ---------------------------------------------------------------------------
# weight stores


def save_weights(path: str, weights: dict[str, np.ndarray]) -> None:
    """Write named float32 arrays; names must be unique and non-empty."""
    parts = [WEIGHTS_MAGIC, struct.pack("<I", len(weights))]
    for name in weights:       # insertion order, preserved on read
        if not name:
            raise WeightFormatError("empty weight name")
        arr = np.ascontiguousarray(weights[name], dtype="<f4")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes(order="C"))
    _atomic_write(path, b"".join(parts))


def load_weights(path: str) -> dict[str, np.ndarray]:
    """Read a weight file back into a name → float32 array mapping."""
    with open(path, "rb") as fh:
        blob = fh.read()

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise WeightFormatError(f"{path}: truncated while reading {what}")
        chunk = blob[pos:pos + n]
        pos += n
        return chunk

    pos = 0
    if take(4, "magic") != WEIGHTS_MAGIC:
        raise WeightFormatError(f"{path}: bad magic")
    (count,) = struct.unpack("<I", take(4, "record count"))
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4, "name length"))
        name = take(name_len, "name").decode("utf-8")
        if name in out:
            raise WeightFormatError(f"{path}: duplicate weight name {name!r}")
        (rank,) = struct.unpack("<I", take(4, "rank"))
        dims = struct.unpack(f"<{rank}I", take(4 * rank, "dims"))
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        data = take(4 * size, f"values of {name!r}")
        out[name] = np.frombuffer(data, dtype="<f4").reshape(dims).copy()
    if pos != len(blob):
        raise WeightFormatError(f"{path}: {len(blob) - pos} trailing bytes")
    return out


# ---------------------------------------------------------------------------
# CSV


def write_csv(path: str, header: tuple[str, ...] | list[str],
              rows: list) -> None:
    """UTF-8 comma-separated file with a header row, written atomically."""
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow(list(row))
    _atomic_write(path, buf.getvalue().encode("utf-8"))


def read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise FrameFormatError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def save_train_log(path: str, log) -> None:
    from .training import LOG_HEADER

    write_csv(path, LOG_HEADER,
              [(e, f"{tl:.8g}", f"{vm:.8g}", f"{ls:.8g}", f"{ln:.8g}")
               for e, tl, vm, ls, ln in log.rows])


def load_train_log(path: str):
    from .training import LOG_HEADER, TrainLog

    header, rows = read_csv(path)
    if header != list(LOG_HEADER):
        raise FrameFormatError(f"{path}: unexpected log header {header}")
    log = TrainLog()
    for row in rows:
        log.append(int(row[0]), float(row[1]), float(row[2]),
                   float(row[3]), float(row[4]))
    return log
