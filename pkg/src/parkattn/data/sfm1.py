"""SFM1: a tiny self-describing binary container for one real-valued matrix.

Layout (all little-endian):

    magic   4 bytes  b"SFM1"
    version u16      1
    dtype   u8       0 = float32, 1 = float64
    reserved u8      0
    rows    u64
    cols    u64
    metalen u32      byte length of the UTF-8 JSON metadata blob
    meta    metalen bytes
    payload rows*cols elements, row-major

Round trips are bit-exact for both dtypes.  Malformed files raise
:class:`Sfm1Error` carrying the byte offset of the problem.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SFM1"
VERSION = 1
_HEADER = struct.Struct("<4sHBBQQI")

_DTYPE_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


class Sfm1Error(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def write_sfm1_bytes(matrix: np.ndarray, metadata: dict | None = None) -> bytes:
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise ValueError(f"SFM1 stores 2-d matrices, got shape {arr.shape}")
    dtype = np.dtype("<f8") if arr.dtype == np.float64 else np.dtype("<f4")
    if arr.dtype not in (np.float32, np.float64):
        raise ValueError(f"SFM1 stores float32/float64, got {arr.dtype}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("SFM1 refuses non-finite payloads")
    meta_blob = json.dumps(metadata or {}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        _DTYPE_CODES[dtype],
        0,
        arr.shape[0],
        arr.shape[1],
        len(meta_blob),
    )
    payload = np.ascontiguousarray(arr, dtype=dtype).tobytes()
    return header + meta_blob + payload


def write_sfm1(matrix: np.ndarray, metadata: dict | None, path) -> None:
    Path(path).write_bytes(write_sfm1_bytes(matrix, metadata))


def read_sfm1_bytes(blob: bytes, offset: int = 0) -> tuple[np.ndarray, dict, int]:
    """Parse one SFM1 record starting at `offset`.

    Returns (matrix, metadata, next_offset) so several records can be
    concatenated in one file (used by model checkpoints).
    """
    if len(blob) - offset < _HEADER.size:
        raise Sfm1Error("truncated header", offset)
    magic, version, dtype_code, _, rows, cols, metalen = _HEADER.unpack_from(blob, offset)
    if magic != MAGIC:
        raise Sfm1Error(f"bad magic {magic!r}", offset)
    if version != VERSION:
        raise Sfm1Error(f"unsupported version {version}", offset + 4)
    if dtype_code not in _CODE_DTYPES:
        raise Sfm1Error(f"unknown dtype code {dtype_code}", offset + 6)
    pos = offset + _HEADER.size
    if len(blob) - pos < metalen:
        raise Sfm1Error("truncated metadata", pos)
    try:
        metadata = json.loads(blob[pos : pos + metalen].decode("utf-8")) if metalen else {}
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise Sfm1Error(f"invalid metadata: {exc}", pos) from exc
    pos += metalen
    dtype = _CODE_DTYPES[dtype_code]
    nbytes = rows * cols * dtype.itemsize
    if len(blob) - pos < nbytes:
        raise Sfm1Error(f"truncated payload, need {nbytes} bytes", pos)
    flat = np.frombuffer(blob[pos : pos + nbytes], dtype=dtype)
    matrix = flat.reshape(rows, cols).copy()
    return matrix, metadata, pos + nbytes


def read_sfm1(path) -> tuple[np.ndarray, dict]:
    blob = Path(path).read_bytes()
    matrix, metadata, end = read_sfm1_bytes(blob)
    if end != len(blob):
        raise Sfm1Error(f"trailing {len(blob) - end} bytes after payload", end)
    return matrix, metadata
