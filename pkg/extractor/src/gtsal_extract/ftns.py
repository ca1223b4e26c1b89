"""Writer for the FTNS feature-tensor container.

Byte layout: magic ``FTNS``, three little-endian uint32 values H, W, C,
then H*W*C IEEE-754 float32 little-endian values in row-major
[row][col][channel] order. Implemented here independently of the consumer
so round trips exercise the format, not shared code.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"FTNS"


def write_ftns(path: str | Path, tensor: np.ndarray) -> None:
    tensor = np.asarray(tensor)
    if tensor.ndim != 3:
        raise ValueError(f"FTNS tensors are (H, W, C), got shape {tensor.shape}")
    h, w, c = tensor.shape
    if min(h, w, c) < 1:
        raise ValueError(f"FTNS dimensions must be positive, got {tensor.shape}")
    data = np.ascontiguousarray(tensor, dtype="<f4")
    if not np.all(np.isfinite(data)):
        raise ValueError("FTNS tensors must be finite")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", h, w, c))
        f.write(data.tobytes(order="C"))
