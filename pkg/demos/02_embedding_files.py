"""The .hemb interchange file, byte by byte.

Writes a timestamp embedding, dumps its header, and shows that reading it
back is bitwise exact.  The format is the only thing a model runtime and
the evaluation side need to agree on.
"""

import tempfile
from pathlib import Path

import numpy as np

from hearness.embio import TimestampEmbedding, read_embedding, write_embedding

emb = TimestampEmbedding(
    timestamps=np.array([0.0, 0.05, 0.10, 0.15]),
    matrix=np.array(
        [[1.5, -2.25, 0.125], [0.5, 0.75, -1.0], [3.0, 0.0, -0.5], [0.25, 2.0, 1.125]],
        dtype=np.float32,
    ),
)

path = Path(tempfile.mkdtemp()) / "demo.hemb"
write_embedding(path, emb)
raw = path.read_bytes()

print(f"wrote {path} ({len(raw)} bytes)")
print(f"  magic      : {raw[:4]!r}")
print(f"  version    : {int.from_bytes(raw[4:6], 'little')}")
print(f"  kind       : {raw[6]} (0 = scene, 1 = timestamp)")
print(f"  T x d      : {int.from_bytes(raw[7:11], 'little')} x "
      f"{int.from_bytes(raw[11:15], 'little')}")
print(f"  payload    : {len(raw) - 15} bytes "
      f"(4 x f64 timestamps + 12 x f32 values, little-endian)")

back = read_embedding(path)
print(f"\nround trip bitwise equal: "
      f"{back.matrix.tobytes() == emb.matrix.tobytes() and back.timestamps.tobytes() == emb.timestamps.tobytes()}")
print(f"timestamps: {back.timestamps.tolist()}")
print(f"frame 0:    {back.matrix[0].tolist()}")
