"""Writer for the SFM1 matrix interchange format.

Implemented from the documented layout (not imported from the consumer):
magic "SFM1", version u16 LE = 1, dtype u8 (0 = f32, 1 = f64), reserved u8,
rows u64 LE, cols u64 LE, metadata length u32 LE, UTF-8 JSON metadata, then
the row-major little-endian payload.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<4sHBBQQI")
_DTYPE_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}


def write_sfm1(matrix: np.ndarray, metadata: dict, path) -> None:
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise ValueError(f"SFM1 stores 2-d matrices, got {arr.shape}")
    dtype = np.dtype("<f8") if arr.dtype == np.float64 else np.dtype("<f4")
    if arr.dtype not in (np.float32, np.float64):
        raise ValueError(f"SFM1 stores float32/float64, got {arr.dtype}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("refusing to write non-finite hidden states")
    meta = json.dumps(metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    header = _HEADER.pack(b"SFM1", 1, _DTYPE_CODES[dtype], 0, arr.shape[0], arr.shape[1], len(meta))
    Path(path).write_bytes(header + meta + np.ascontiguousarray(arr, dtype=dtype).tobytes())
