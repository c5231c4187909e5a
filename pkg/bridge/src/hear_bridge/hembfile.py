"""Writer for the .hemb embedding interchange file.

Implemented here independently of the evaluation harness: the byte layout
is the contract between the two packages, so the bridge produces it from
the documented layout rather than by linking the consumer.

Layout, little-endian: magic b"HEMB", u16 version=1, u8 kind (0 scene,
1 timestamp), u32 T (1 for scene), u32 d, then T float64 timestamps in
seconds (timestamp kind only), then T*d float32 values row-major.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"HEMB"
VERSION = 1
_HEADER = struct.Struct("<4sHBII")

KIND_SCENE = 0
KIND_TIMESTAMP = 1


def write_scene(path, vector: np.ndarray) -> np.ndarray:
    """Write a (d,) vector; returns the float32 values actually written."""
    values = np.ascontiguousarray(vector, dtype="<f4")
    if values.ndim != 1 or values.size < 1:
        raise ValueError("scene embedding must be a non-empty 1-D vector")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, KIND_SCENE, 1, values.size))
        fh.write(values.tobytes())
    return values


def write_timestamp(path, timestamps_sec: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Write (T,) second timestamps and a (T, d) matrix; returns the float32
    values actually written."""
    ts = np.ascontiguousarray(timestamps_sec, dtype="<f8")
    values = np.ascontiguousarray(matrix, dtype="<f4")
    if ts.ndim != 1 or values.ndim != 2 or ts.shape[0] != values.shape[0]:
        raise ValueError("timestamps (T,) must match matrix (T, d)")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, KIND_TIMESTAMP, *values.shape))
        fh.write(ts.tobytes())
        fh.write(values.tobytes())
    return values
