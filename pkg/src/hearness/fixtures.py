"""Deterministic synthetic fixture tasks.

Three small tasks in the common format so the full pipeline can run (and CI
can test it) without any real dataset:

  * ``mini-pitch``   scene / multiclass / accuracy: 10 sine-wave pitch
    classes, 100 one-second clips per class, fixed train/valid/test split.
  * ``mini-tags``    scene / multilabel / mAP: each clip sums 1-3 of 5
    tones over noise.
  * ``mini-events``  timestamp / multilabel / onset F-measure (200 ms
    tolerance): tone bursts on a silent background with event ground truth.

Generation is a pure function of the seed: the same seed reproduces every
WAV byte and label file.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from . import task as task_mod
from .task import ClipRecord, Event, LoadedTask, MetricSpec, TaskDefinition, write_task

SAMPLE_RATE = 16000

PITCH_FREQS = tuple(220.0 * 2.0 ** (k / 3.0) for k in range(10))  # 220 .. 1760 Hz
TAG_FREQS = (250.0, 425.0, 707.0, 1189.0, 2000.0)
EVENT_FREQS = (330.0, 660.0, 1320.0)


def write_wav(path: Path, samples: np.ndarray, sample_rate: int = SAMPLE_RATE) -> None:
    """Write mono float samples in [-1, 1] as 16-bit PCM."""
    path.parent.mkdir(parents=True, exist_ok=True)
    pcm = np.clip(np.asarray(samples) * 32767.0, -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(sample_rate)
        fh.writeframes(pcm.tobytes())


def read_wav(path) -> tuple[int, np.ndarray]:
    """Read a 16-bit PCM WAV as (sample_rate, float array in [-1, 1])."""
    with wave.open(str(path), "rb") as fh:
        if fh.getsampwidth() != 2 or fh.getnchannels() != 1:
            raise ValueError(f"{path}: expected mono 16-bit PCM")
        sr = fh.getframerate()
        pcm = np.frombuffer(fh.readframes(fh.getnframes()), dtype="<i2")
    return sr, pcm.astype(np.float64) / 32767.0


def _tone(freq: float, duration_sec: float, amp: float, phase: float,
          sr: int = SAMPLE_RATE) -> np.ndarray:
    t = np.arange(round(duration_sec * sr)) / sr
    return amp * np.sin(2 * np.pi * freq * t + phase)


def _tvt_assign(index: int, per_class: int) -> str:
    # 80/10/10 within each class, by clip index
    if index < per_class * 8 // 10:
        return "train"
    if index < per_class * 9 // 10:
        return "valid"
    return "test"


def make_mini_pitch(root: Path, seed: int) -> LoadedTask:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    labels = tuple(f"pitch_{round(f)}hz" for f in PITCH_FREQS)
    definition = TaskDefinition(
        name="mini-pitch",
        embedding_type=task_mod.SCENE,
        predictor_type=task_mod.MULTICLASS,
        split_method=task_mod.TRAIN_VAL_TEST,
        sample_rates=(SAMPLE_RATE,),
        clip_duration_sec=1.0,
        metric=MetricSpec(kind="accuracy"),
        labels=labels,
    )
    per_class = 100
    clips = []
    for cls, freq in enumerate(PITCH_FREQS):
        for i in range(per_class):
            split = _tvt_assign(i, per_class)
            relpath = f"{labels[cls]}_{i:03d}.wav"
            amp = rng.uniform(0.3, 0.9)
            phase = rng.uniform(0, 2 * np.pi)
            noise = rng.normal(0.0, 0.05, SAMPLE_RATE)
            samples = _tone(freq, 1.0, amp, phase) + noise
            write_wav(root / str(SAMPLE_RATE) / split / relpath, samples)
            clips.append(ClipRecord(relpath=relpath, split=split, scene_labels=(cls,)))
    clips.sort(key=lambda c: (c.split, c.relpath))
    loaded = LoadedTask(definition=definition, clips=tuple(clips), root=root)
    write_task(loaded, root)
    return loaded


def make_mini_tags(root: Path, seed: int) -> LoadedTask:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,)))
    labels = tuple(f"tone_{round(f)}hz" for f in TAG_FREQS)
    definition = TaskDefinition(
        name="mini-tags",
        embedding_type=task_mod.SCENE,
        predictor_type=task_mod.MULTILABEL,
        split_method=task_mod.TRAIN_VAL_TEST,
        sample_rates=(SAMPLE_RATE,),
        clip_duration_sec=1.0,
        metric=MetricSpec(kind="mean_average_precision"),
        labels=labels,
    )
    n_clips = 240
    clips = []
    for i in range(n_clips):
        split = _tvt_assign(i, n_clips)
        relpath = f"tags_{i:03d}.wav"
        n_active = int(rng.integers(1, 4))
        active = sorted(rng.choice(len(TAG_FREQS), size=n_active, replace=False).tolist())
        samples = rng.normal(0.0, 0.05, SAMPLE_RATE)
        for cls in active:
            samples = samples + _tone(
                TAG_FREQS[cls], 1.0, rng.uniform(0.2, 0.5), rng.uniform(0, 2 * np.pi)
            )
        write_wav(root / str(SAMPLE_RATE) / split / relpath, samples)
        clips.append(ClipRecord(relpath=relpath, split=split, scene_labels=tuple(active)))
    clips.sort(key=lambda c: (c.split, c.relpath))
    loaded = LoadedTask(definition=definition, clips=tuple(clips), root=root)
    write_task(loaded, root)
    return loaded


def _place_events(rng, clip_sec: float, min_gap: float = 0.3):
    """Random per-class event intervals; same-class events keep a clear gap."""
    events = []
    for cls in range(len(EVENT_FREQS)):
        n_ev = int(rng.choice([0, 1, 2], p=[0.35, 0.45, 0.2]))
        placed = []
        for _ in range(n_ev):
            for _attempt in range(20):
                dur = rng.uniform(0.35, 0.8)
                onset = rng.uniform(0.1, clip_sec - dur - 0.1)
                ok = all(
                    onset - min_gap > p_off or onset + dur + min_gap < p_on
                    for p_on, p_off in placed
                )
                if ok:
                    placed.append((onset, onset + dur))
                    break
        events.extend(Event(onset=on, offset=off, label=cls) for on, off in placed)
    if not events:  # every clip carries at least one event
        dur = rng.uniform(0.35, 0.8)
        onset = rng.uniform(0.1, clip_sec - dur - 0.1)
        events.append(Event(onset=onset, offset=onset + dur, label=0))
    events.sort(key=lambda e: (e.onset, e.offset, e.label))
    return events


def make_mini_events(root: Path, seed: int) -> LoadedTask:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3,)))
    labels = tuple(f"burst_{round(f)}hz" for f in EVENT_FREQS)
    clip_sec = 4.0
    definition = TaskDefinition(
        name="mini-events",
        embedding_type=task_mod.TIMESTAMP,
        predictor_type=task_mod.MULTILABEL,
        split_method=task_mod.TRAIN_VAL_TEST,
        sample_rates=(SAMPLE_RATE,),
        clip_duration_sec=clip_sec,
        metric=MetricSpec(kind="onset_fms", onset_tolerance_ms=200.0),
        labels=labels,
    )
    n_clips = 48
    n_samples = round(clip_sec * SAMPLE_RATE)
    clips = []
    for i in range(n_clips):
        split = _tvt_assign(i, n_clips)
        relpath = f"events_{i:03d}.wav"
        events = _place_events(rng, clip_sec)
        samples = rng.normal(0.0, 0.02, n_samples)
        for ev in events:
            start = round(ev.onset * SAMPLE_RATE)
            burst = _tone(
                EVENT_FREQS[ev.label],
                ev.offset - ev.onset,
                rng.uniform(0.4, 0.8),
                rng.uniform(0, 2 * np.pi),
            )
            samples[start : start + burst.size] += burst
        write_wav(root / str(SAMPLE_RATE) / split / relpath, samples)
        # snap stored times to the values that ms-file round-tripping preserves
        snapped = tuple(
            Event(
                onset=round(ev.onset * 1000.0) / 1000.0,
                offset=round(ev.offset * 1000.0) / 1000.0,
                label=ev.label,
            )
            for ev in events
        )
        clips.append(ClipRecord(relpath=relpath, split=split, events=snapped))
    clips.sort(key=lambda c: (c.split, c.relpath))
    loaded = LoadedTask(definition=definition, clips=tuple(clips), root=root)
    write_task(loaded, root)
    return loaded


GENERATORS = {
    "mini-pitch": make_mini_pitch,
    "mini-tags": make_mini_tags,
    "mini-events": make_mini_events,
}


def make_fixture_tasks(out_dir, seed: int = 42, names=None) -> dict[str, LoadedTask]:
    """Generate the bundled synthetic tasks under ``out_dir/<name>/``."""
    out = Path(out_dir)
    tasks = {}
    for name, generator in GENERATORS.items():
        if names is not None and name not in names:
            continue
        tasks[name] = generator(out / name, seed)
    return tasks
