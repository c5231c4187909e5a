import struct
from pathlib import Path

import numpy as np
import pytest

from hearness.embio import (
    SceneEmbedding,
    TimestampEmbedding,
    read_embedding,
    write_embedding,
)
from hearness.errors import (
    BadMagic,
    NonMonotonicTimestamps,
    TruncatedFile,
    UnsupportedVersion,
)

DATA = Path(__file__).parent / "data"


def test_round_trip_timestamp_bitwise(tmp_path):
    rng = np.random.default_rng(3)
    emb = TimestampEmbedding(
        timestamps=np.cumsum(rng.uniform(0.01, 0.2, 7)),
        matrix=rng.normal(size=(7, 33)).astype(np.float32),
    )
    path = tmp_path / "x.hemb"
    write_embedding(path, emb)
    back = read_embedding(path)
    assert isinstance(back, TimestampEmbedding)
    assert back.matrix.tobytes() == emb.matrix.tobytes()
    assert back.timestamps.tobytes() == emb.timestamps.tobytes()


def test_round_trip_scene_bitwise(tmp_path):
    emb = SceneEmbedding(vector=np.random.default_rng(1).normal(size=129).astype(np.float32))
    path = tmp_path / "s.hemb"
    write_embedding(path, emb)
    back = read_embedding(path)
    assert isinstance(back, SceneEmbedding)
    assert back.vector.tobytes() == emb.vector.tobytes()


def test_non_monotonic_timestamps_rejected_on_construction():
    with pytest.raises(NonMonotonicTimestamps):
        TimestampEmbedding(
            timestamps=np.array([0.1, 0.1]), matrix=np.zeros((2, 3), np.float32)
        )


def test_non_monotonic_timestamps_rejected_on_read(tmp_path):
    header = struct.pack("<4sHBII", b"HEMB", 1, 1, 2, 1)
    ts = np.array([0.1, 0.1], dtype="<f8").tobytes()
    vals = np.zeros(2, dtype="<f4").tobytes()
    path = tmp_path / "bad.hemb"
    path.write_bytes(header + ts + vals)
    with pytest.raises(NonMonotonicTimestamps):
        read_embedding(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "t.hemb"
    path.write_bytes(b"HEMB\x01\x00")
    with pytest.raises(TruncatedFile):
        read_embedding(path)


def test_truncated_payload(tmp_path):
    emb = SceneEmbedding(vector=np.arange(8, dtype=np.float32))
    path = tmp_path / "t.hemb"
    write_embedding(path, emb)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(TruncatedFile):
        read_embedding(path)


def test_bad_magic(tmp_path):
    path = tmp_path / "m.hemb"
    path.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(BadMagic):
        read_embedding(path)


def test_unsupported_version(tmp_path):
    path = tmp_path / "v.hemb"
    path.write_bytes(struct.pack("<4sHBII", b"HEMB", 9, 0, 1, 1) + bytes(4))
    with pytest.raises(UnsupportedVersion):
        read_embedding(path)


def test_golden_timestamp_file_decodes_to_known_values():
    emb = read_embedding(DATA / "golden_timestamp.hemb")
    assert isinstance(emb, TimestampEmbedding)
    assert emb.timestamps.tolist() == [0.0, 0.25, 0.5]
    assert emb.matrix.tolist() == [[1.5, -2.25], [0.125, 3.0], [-0.5, 0.0078125]]


def test_golden_scene_file_decodes_to_known_values():
    emb = read_embedding(DATA / "golden_scene.hemb")
    assert isinstance(emb, SceneEmbedding)
    assert emb.vector.tolist() == [2.0, -0.75, 0.0625, 123456.0]


def test_writer_reproduces_golden_bytes(tmp_path):
    """The writer and the hand-packed fixture agree byte for byte."""
    emb = TimestampEmbedding(
        timestamps=np.array([0.0, 0.25, 0.5]),
        matrix=np.array([[1.5, -2.25], [0.125, 3.0], [-0.5, 0.0078125]], np.float32),
    )
    path = tmp_path / "g.hemb"
    write_embedding(path, emb)
    assert path.read_bytes() == (DATA / "golden_timestamp.hemb").read_bytes()


def test_header_layout_is_little_endian():
    raw = (DATA / "golden_scene.hemb").read_bytes()
    assert raw[:4] == b"HEMB"
    assert raw[4:6] == (1).to_bytes(2, "little")  # version
    assert raw[6] == 0  # scene kind
    assert int.from_bytes(raw[7:11], "little") == 1  # T
    assert int.from_bytes(raw[11:15], "little") == 4  # d
