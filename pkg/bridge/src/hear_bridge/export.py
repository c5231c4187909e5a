"""Export embeddings from a challenge-API model over one task directory.

The model module must expose the common API entry points:

    load_model(weights_path, ...)                 -> model
    get_scene_embeddings(audio_batch, model)      -> (n, d) array-like
    get_timestamp_embeddings(audio_batch, model)  -> ((n, T, d), (n, T)) with
                                                     per-frame times in ms

``audio_batch`` is a list of mono float arrays.  Timestamps are converted
to seconds on export (the API convention is milliseconds).  The model
runtime stays entirely on this side of the file boundary: the evaluation
harness only ever sees the written .hemb files.
"""

from __future__ import annotations

import importlib
import inspect
import json
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hembfile import write_scene, write_timestamp


class BridgeError(Exception):
    pass


class ApiMissingEntryPoint(BridgeError):
    """The model module lacks a required challenge-API function."""


class ShapeMismatch(BridgeError):
    """Model output dimensions are inconsistent across clips."""


class NonMonotonicTimestamps(BridgeError):
    """The model emitted non-increasing frame timestamps."""


@dataclass
class BridgeConfig:
    model_module: str
    weights_path: str | None
    task_dir: str
    sample_rate: int
    out_dir: str
    device: str | None = None
    batch_size: int = 16


def _read_task_metadata(task_dir: Path) -> dict:
    path = task_dir / "task.json"
    if not path.is_file():
        raise BridgeError(f"not a task directory (no task.json): {task_dir}")
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _splits(meta: dict) -> list[str]:
    if meta["split_method"] == "kfold":
        return [f"fold{i}" for i in range(meta["k"])]
    return ["train", "valid", "test"]


def _clips_for_split(task_dir: Path, meta: dict, split: str) -> list[str]:
    prefix = "events" if meta["embedding_type"] == "timestamp" else "labels"
    with open(task_dir / f"{prefix}.{split}.json", "r", encoding="utf-8") as fh:
        return sorted(json.load(fh))


def _read_wav(path: Path) -> np.ndarray:
    with wave.open(str(path), "rb") as fh:
        if fh.getsampwidth() != 2 or fh.getnchannels() != 1:
            raise BridgeError(f"{path}: expected mono 16-bit PCM")
        pcm = np.frombuffer(fh.readframes(fh.getnframes()), dtype="<i2")
    return pcm.astype(np.float32) / 32767.0


def _load_api(module_name: str):
    module = importlib.import_module(module_name)
    missing = [
        name
        for name in ("load_model", "get_scene_embeddings", "get_timestamp_embeddings")
        if not callable(getattr(module, name, None))
    ]
    if missing:
        raise ApiMissingEntryPoint(
            f"{module_name} lacks challenge-API entry points: {', '.join(missing)}"
        )
    return module


def _load_model(module, cfg: BridgeConfig):
    params = inspect.signature(module.load_model).parameters
    kwargs = {}
    if cfg.device is not None and "device" in params:
        kwargs["device"] = cfg.device
    return module.load_model(cfg.weights_path, **kwargs)


def _batched(items, size):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def export_task(cfg: BridgeConfig) -> dict:
    """Write one .hemb per clip plus manifest.json; returns the manifest.

    Re-running skips .hemb files that already exist and rebuilds an
    identical manifest, so an interrupted export can simply be restarted.
    """
    task_dir = Path(cfg.task_dir)
    out_dir = Path(cfg.out_dir)
    meta = _read_task_metadata(task_dir)
    if cfg.sample_rate not in meta["sample_rates"]:
        raise BridgeError(
            f"sample rate {cfg.sample_rate} not declared by task {meta['name']} "
            f"(declared: {meta['sample_rates']})"
        )
    timestamp_task = meta["embedding_type"] == "timestamp"

    module = _load_api(cfg.model_module)
    model = _load_model(module, cfg)

    entries = []
    expected_dim = None
    for split in _splits(meta):
        for batch in _batched(_clips_for_split(task_dir, meta, split), cfg.batch_size):
            targets = [
                out_dir / meta["name"] / split / f"{relpath}.hemb" for relpath in batch
            ]
            audio = None
            if not all(t.exists() for t in targets):
                audio = [
                    _read_wav(task_dir / str(cfg.sample_rate) / split / relpath)
                    for relpath in batch
                ]
            if timestamp_task:
                expected_dim = _export_timestamp_batch(
                    module, model, batch, audio, targets, entries, split, expected_dim
                )
            else:
                expected_dim = _export_scene_batch(
                    module, model, batch, audio, targets, entries, split, expected_dim
                )

    manifest = {
        "model": cfg.model_module,
        "task": meta["name"],
        "sample_rate": cfg.sample_rate,
        "embedding_type": meta["embedding_type"],
        "entries": entries,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _check_dim(dim: int, expected: int | None, relpath: str) -> int:
    if expected is not None and dim != expected:
        raise ShapeMismatch(
            f"{relpath}: embedding dim {dim} differs from earlier clips ({expected})"
        )
    return dim


def _export_scene_batch(module, model, batch, audio, targets, entries, split, expected):
    vectors = None
    if audio is not None:
        vectors = np.asarray(module.get_scene_embeddings(audio, model), dtype=np.float32)
        if vectors.ndim != 2 or vectors.shape[0] != len(batch):
            raise ShapeMismatch(
                f"get_scene_embeddings returned shape {vectors.shape} for "
                f"{len(batch)} clips"
            )
    for i, (relpath, target) in enumerate(zip(batch, targets)):
        if target.exists():
            dim = _read_dim(target)
        else:
            written = write_scene(target, vectors[i])
            dim = written.size
        expected = _check_dim(dim, expected, relpath)
        entries.append(
            {"relpath": relpath, "split": split, "file": _relative_file(target),
             "kind": "scene", "shape": [1, dim]}
        )
    return expected


def _export_timestamp_batch(module, model, batch, audio, targets, entries, split, expected):
    matrices = times_ms = None
    if audio is not None:
        emb, times_ms = module.get_timestamp_embeddings(audio, model)
        matrices = np.asarray(emb, dtype=np.float32)
        times_ms = np.asarray(times_ms, dtype=np.float64)
        if matrices.ndim != 3 or matrices.shape[0] != len(batch):
            raise ShapeMismatch(
                f"get_timestamp_embeddings returned shape {matrices.shape} for "
                f"{len(batch)} clips"
            )
    for i, (relpath, target) in enumerate(zip(batch, targets)):
        if target.exists():
            dim, frames = _read_timestamp_shape(target)
        else:
            timestamps_sec = times_ms[i] / 1000.0  # API convention is ms
            if timestamps_sec.size > 1 and not np.all(np.diff(timestamps_sec) > 0):
                raise NonMonotonicTimestamps(
                    f"{relpath}: model timestamps are not strictly increasing"
                )
            written = write_timestamp(target, timestamps_sec, matrices[i])
            frames, dim = written.shape
        expected = _check_dim(dim, expected, relpath)
        entries.append(
            {"relpath": relpath, "split": split, "file": _relative_file(target),
             "kind": "timestamp", "shape": [frames, dim]}
        )
    return expected


def _relative_file(target: Path) -> str:
    # task/split/clip.hemb, stable across machines
    return "/".join(target.parts[-3:])


def _read_dim(path: Path) -> int:
    raw = path.read_bytes()[:15]
    return int.from_bytes(raw[11:15], "little")


def _read_timestamp_shape(path: Path) -> tuple[int, int]:
    raw = path.read_bytes()[:15]
    frames = int.from_bytes(raw[7:11], "little")
    return int.from_bytes(raw[11:15], "little"), frames
