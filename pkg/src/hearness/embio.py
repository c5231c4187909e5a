"""Bit-exact interchange format for scene and timestamp embeddings.

One ``.hemb`` file holds one clip's embedding.  Layout, all little-endian:

    offset  size  field
    0       4     magic  b"HEMB"
    4       2     u16    format version (currently 1)
    6       1     u8     kind: 0 = scene, 1 = timestamp
    7       4     u32    T, number of frames (1 for scene)
    11      4     u32    d, embedding dimension
    15      8*T   f64    frame timestamps in seconds (timestamp kind only)
    ...     4*T*d f32    values, row-major

Values are single precision (typical model output width); timestamps are
double precision so long clips do not accumulate rounding error.  The byte
layout is the contract with external producers and must stay byte-identical
regardless of who wrote the file.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    EmbeddingFileError,
    NonMonotonicTimestamps,
    TruncatedFile,
    UnsupportedVersion,
)

MAGIC = b"HEMB"
VERSION = 1
_HEADER = struct.Struct("<4sHBII")

KIND_SCENE = 0
KIND_TIMESTAMP = 1


@dataclass(frozen=True)
class SceneEmbedding:
    """One fixed-size vector summarizing an entire clip."""

    vector: np.ndarray  # (d,) float32

    def __post_init__(self):
        vec = np.ascontiguousarray(self.vector, dtype=np.float32)
        if vec.ndim != 1 or vec.size < 1:
            raise ValueError("scene embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(vec)):
            raise ValueError("scene embedding contains non-finite values")
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


@dataclass(frozen=True)
class TimestampEmbedding:
    """A time-indexed sequence of vectors at (typically regular) intervals."""

    timestamps: np.ndarray  # (T,) float64, seconds, strictly increasing
    matrix: np.ndarray  # (T, d) float32

    def __post_init__(self):
        ts = np.ascontiguousarray(self.timestamps, dtype=np.float64)
        mat = np.ascontiguousarray(self.matrix, dtype=np.float32)
        if ts.ndim != 1 or mat.ndim != 2 or ts.shape[0] != mat.shape[0]:
            raise ValueError("timestamps (T,) must match matrix (T, d)")
        if ts.shape[0] < 1 or mat.shape[1] < 1:
            raise ValueError("timestamp embedding needs T >= 1 and d >= 1")
        if not np.all(np.isfinite(ts)) or not np.all(np.isfinite(mat)):
            raise ValueError("timestamp embedding contains non-finite values")
        if ts.shape[0] > 1 and not np.all(np.diff(ts) > 0):
            raise NonMonotonicTimestamps("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "matrix", mat)

    @property
    def n_frames(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])


Embedding = SceneEmbedding | TimestampEmbedding


def write_embedding(path, emb: Embedding) -> None:
    """Serialize ``emb`` to ``path`` in the ``.hemb`` layout above."""
    path = Path(path)
    if isinstance(emb, SceneEmbedding):
        kind, n_frames, dim = KIND_SCENE, 1, emb.dim
        payload = emb.vector
    elif isinstance(emb, TimestampEmbedding):
        kind, n_frames, dim = KIND_TIMESTAMP, emb.n_frames, emb.dim
        payload = emb.matrix
    else:
        raise TypeError(f"not an embedding: {type(emb).__name__}")

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, kind, n_frames, dim))
        if kind == KIND_TIMESTAMP:
            fh.write(emb.timestamps.astype("<f8", copy=False).tobytes())
        fh.write(np.ascontiguousarray(payload, dtype="<f4").tobytes())


def read_embedding(path) -> Embedding:
    """Deserialize a ``.hemb`` file; the inverse of :func:`write_embedding`."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        if raw[: len(MAGIC)] != MAGIC[: len(raw)]:
            raise BadMagic(f"{path}: not a .hemb file")
        raise TruncatedFile(f"{path}: {len(raw)} bytes is shorter than the header")
    magic, version, kind, n_frames, dim = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"{path}: version {version} (supported: {VERSION})")
    if kind not in (KIND_SCENE, KIND_TIMESTAMP):
        raise EmbeddingFileError(f"{path}: unknown embedding kind {kind}")
    if n_frames < 1 or dim < 1:
        raise EmbeddingFileError(f"{path}: invalid shape T={n_frames}, d={dim}")

    offset = _HEADER.size
    timestamps = None
    if kind == KIND_TIMESTAMP:
        ts_bytes = 8 * n_frames
        if len(raw) < offset + ts_bytes:
            raise TruncatedFile(f"{path}: timestamps truncated")
        timestamps = np.frombuffer(raw, dtype="<f8", count=n_frames, offset=offset)
        offset += ts_bytes

    val_bytes = 4 * n_frames * dim
    if len(raw) < offset + val_bytes:
        raise TruncatedFile(f"{path}: values truncated")
    values = np.frombuffer(raw, dtype="<f4", count=n_frames * dim, offset=offset)

    if kind == KIND_SCENE:
        return SceneEmbedding(vector=values.copy())
    matrix = values.reshape(n_frames, dim).copy()
    if n_frames > 1 and not np.all(np.diff(timestamps) > 0):
        raise NonMonotonicTimestamps(f"{path}: timestamps not strictly increasing")
    return TimestampEmbedding(timestamps=timestamps.copy(), matrix=matrix)
