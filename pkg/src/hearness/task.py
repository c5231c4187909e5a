"""The common task format: on-disk layout and in-memory task/data model.

A task directory looks like::

    task.json                     metadata (see TaskDefinition.to_json)
    labels.<split>.json           scene tasks:  {relpath: [label, ...]}
    events.<split>.json           timestamp tasks:
                                  {relpath: [{"start_ms", "end_ms", "label"}, ...]}
    <sr>/<split>/<relpath>        16-bit PCM WAV at sample rate <sr>

Splits are ``train``/``valid``/``test`` for train/val/test tasks and
``fold0`` .. ``fold{k-1}`` for k-fold tasks.  Times in label files are
milliseconds; everything in memory is seconds.  The loaded model is
immutable and safe to share across threads.
"""

from __future__ import annotations

import json
import math
import wave
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    ClipDurationMismatch,
    FoldOutOfRange,
    LabelOutsideVocabulary,
    MalformedEvent,
    MissingAudioFile,
    MissingMetadata,
    TaskFormatError,
)

SCENE = "scene"
TIMESTAMP = "timestamp"
MULTICLASS = "multiclass"
MULTILABEL = "multilabel"
TRAIN_VAL_TEST = "train_val_test"
KFOLD = "kfold"

ALLOWED_SAMPLE_RATES = (16000, 22050, 32000, 44100)
TVT_SPLITS = ("train", "valid", "test")

EVENT_METRIC_KINDS = ("onset_fms", "onset_offset_fms")
SCENE_METRIC_KINDS = ("accuracy", "pitch_acc", "mean_average_precision", "aucroc")


@dataclass(frozen=True)
class MetricSpec:
    """Which metric scores the task, plus its parameters.

    kinds: accuracy | pitch_acc | mean_average_precision | aucroc |
    onset_fms | onset_offset_fms.  All are higher-is-better.
    """

    kind: str
    onset_tolerance_ms: float | None = None  # onset_fms / onset_offset_fms
    offset_tolerance_ms: float | None = None  # onset_offset_fms
    duration_ratio: float | None = None  # onset_offset_fms

    higher_is_better = True

    def __post_init__(self):
        if self.kind not in EVENT_METRIC_KINDS + SCENE_METRIC_KINDS:
            raise TaskFormatError(f"unknown metric kind {self.kind!r}")
        if self.kind in EVENT_METRIC_KINDS:
            if not (self.onset_tolerance_ms and self.onset_tolerance_ms > 0):
                raise TaskFormatError(f"{self.kind} needs a positive onset tolerance")
        if self.kind == "onset_offset_fms":
            if self.offset_tolerance_ms is None or self.duration_ratio is None:
                raise TaskFormatError(
                    "onset_offset_fms needs offset_tolerance_ms and duration_ratio"
                )

    @property
    def event_based(self) -> bool:
        return self.kind in EVENT_METRIC_KINDS

    def to_json(self) -> dict:
        params = {}
        if self.onset_tolerance_ms is not None:
            params["onset_tolerance_ms"] = self.onset_tolerance_ms
        if self.offset_tolerance_ms is not None:
            params["offset_tolerance_ms"] = self.offset_tolerance_ms
        if self.duration_ratio is not None:
            params["duration_ratio"] = self.duration_ratio
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_json(cls, obj: dict) -> "MetricSpec":
        params = obj.get("params", {})
        return cls(
            kind=obj["kind"],
            onset_tolerance_ms=params.get("onset_tolerance_ms"),
            offset_tolerance_ms=params.get("offset_tolerance_ms"),
            duration_ratio=params.get("duration_ratio"),
        )


@dataclass(frozen=True)
class Event:
    """A labeled sound event; times in seconds, label as a vocabulary index."""

    onset: float
    offset: float
    label: int

    def __post_init__(self):
        if not (math.isfinite(self.onset) and math.isfinite(self.offset)):
            raise MalformedEvent(f"non-finite event times ({self.onset}, {self.offset})")
        if self.onset < 0:
            raise MalformedEvent(f"negative onset {self.onset}")
        if self.offset <= self.onset:
            raise MalformedEvent(
                f"offset {self.offset} must be greater than onset {self.onset}"
            )


@dataclass(frozen=True)
class ClipRecord:
    """One audio clip with its split assignment and ground truth.

    Exactly one of scene_labels / events is populated, matching the task's
    embedding type.
    """

    relpath: str
    split: str  # "train"/"valid"/"test" or "fold<i>"
    scene_labels: tuple[int, ...] | None = None
    events: tuple[Event, ...] | None = None


@dataclass(frozen=True)
class TaskDefinition:
    name: str
    embedding_type: str  # scene | timestamp
    predictor_type: str  # multiclass | multilabel
    split_method: str  # train_val_test | kfold
    sample_rates: tuple[int, ...]
    clip_duration_sec: float | None  # None = variable
    metric: MetricSpec
    labels: tuple[str, ...]
    k: int | None = None  # kfold only
    validation_check_interval_epochs: int = 3

    def __post_init__(self):
        if self.embedding_type not in (SCENE, TIMESTAMP):
            raise TaskFormatError(f"bad embedding_type {self.embedding_type!r}")
        if self.predictor_type not in (MULTICLASS, MULTILABEL):
            raise TaskFormatError(f"bad predictor_type {self.predictor_type!r}")
        if self.split_method not in (TRAIN_VAL_TEST, KFOLD):
            raise TaskFormatError(f"bad split_method {self.split_method!r}")
        if self.split_method == KFOLD:
            if self.k is None or self.k < 3:
                raise TaskFormatError("k-fold tasks need k >= 3")
        elif self.k is not None:
            raise TaskFormatError("k only applies to k-fold tasks")
        bad_rates = [sr for sr in self.sample_rates if sr not in ALLOWED_SAMPLE_RATES]
        if bad_rates or not self.sample_rates:
            raise TaskFormatError(
                f"sample_rates must be a non-empty subset of {ALLOWED_SAMPLE_RATES}, "
                f"got {self.sample_rates}"
            )
        if not self.labels or len(set(self.labels)) != len(self.labels):
            raise TaskFormatError("label vocabulary must be non-empty and duplicate-free")
        if self.clip_duration_sec is not None and self.clip_duration_sec <= 0:
            raise TaskFormatError("clip_duration_sec must be positive or variable")
        if self.embedding_type == TIMESTAMP and not self.metric.event_based:
            raise TaskFormatError("timestamp tasks need an event-based metric")
        if self.validation_check_interval_epochs < 1:
            raise TaskFormatError("validation_check_interval_epochs must be >= 1")

    @property
    def splits(self) -> tuple[str, ...]:
        if self.split_method == KFOLD:
            return tuple(f"fold{i}" for i in range(self.k))
        return TVT_SPLITS

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def label_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelOutsideVocabulary(
                f"label {label!r} not in the vocabulary of task {self.name!r}"
            ) from None

    def to_json(self) -> dict:
        doc = {
            "name": self.name,
            "embedding_type": self.embedding_type,
            "predictor_type": self.predictor_type,
            "split_method": self.split_method,
            "sample_rates": list(self.sample_rates),
            "clip_duration_sec": (
                "variable" if self.clip_duration_sec is None else self.clip_duration_sec
            ),
            "metric": self.metric.to_json(),
            "labels": list(self.labels),
            "validation_check_interval_epochs": self.validation_check_interval_epochs,
        }
        if self.split_method == KFOLD:
            doc["k"] = self.k
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "TaskDefinition":
        required = (
            "name",
            "embedding_type",
            "predictor_type",
            "split_method",
            "sample_rates",
            "clip_duration_sec",
            "metric",
            "labels",
        )
        missing = [key for key in required if key not in doc]
        if missing:
            raise MissingMetadata(f"task.json is missing keys: {', '.join(missing)}")
        duration = doc["clip_duration_sec"]
        return cls(
            name=doc["name"],
            embedding_type=doc["embedding_type"],
            predictor_type=doc["predictor_type"],
            split_method=doc["split_method"],
            sample_rates=tuple(doc["sample_rates"]),
            clip_duration_sec=None if duration == "variable" else float(duration),
            metric=MetricSpec.from_json(doc["metric"]),
            labels=tuple(doc["labels"]),
            k=doc.get("k"),
            validation_check_interval_epochs=doc.get(
                "validation_check_interval_epochs", 3
            ),
        )


@dataclass(frozen=True)
class LoadedTask:
    """A fully validated task: definition plus every clip record."""

    definition: TaskDefinition
    clips: tuple[ClipRecord, ...]
    root: Path | None = None

    def clips_in(self, split: str) -> tuple[ClipRecord, ...]:
        return tuple(c for c in self.clips if c.split == split)


@dataclass(frozen=True)
class Partitions:
    train: tuple[ClipRecord, ...]
    validation: tuple[ClipRecord, ...]
    test: tuple[ClipRecord, ...]


def resolve_partitions(task: LoadedTask, fold: int | None = None) -> Partitions:
    """Resolve train/validation/test clip lists for one evaluation.

    Train/val/test tasks take ``fold=None``.  For a k-fold task, evaluation
    ``fold=i`` holds out fold i for test, fold (i+1) mod k for validation,
    and trains on the remaining folds, so every evaluation has a held-out
    validation split for early stopping.
    """
    definition = task.definition
    if definition.split_method == TRAIN_VAL_TEST:
        if fold is not None:
            raise FoldOutOfRange(
                f"task {definition.name!r} uses a fixed train/valid/test split; "
                f"fold={fold} does not apply"
            )
        return Partitions(
            train=task.clips_in("train"),
            validation=task.clips_in("valid"),
            test=task.clips_in("test"),
        )

    k = definition.k
    if fold is None or not (0 <= fold < k):
        raise FoldOutOfRange(f"fold must be in [0, {k}) for task {definition.name!r}, got {fold}")
    test_split = f"fold{fold}"
    val_split = f"fold{(fold + 1) % k}"
    train = tuple(c for c in task.clips if c.split not in (test_split, val_split))
    return Partitions(
        train=train,
        validation=task.clips_in(val_split),
        test=task.clips_in(test_split),
    )


# --- loading -------------------------------------------------------------


def _read_json(path: Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise MissingMetadata(f"missing file: {path}") from None
    except json.JSONDecodeError as exc:
        raise MissingMetadata(f"unparseable JSON in {path}: {exc}") from None


def _scene_clips(definition: TaskDefinition, root: Path) -> list[ClipRecord]:
    clips = []
    for split in definition.splits:
        doc = _read_json(root / f"labels.{split}.json")
        for relpath in sorted(doc):
            labels = doc[relpath]
            indices = tuple(sorted(definition.label_index(lbl) for lbl in labels))
            if definition.predictor_type == MULTICLASS and len(indices) != 1:
                raise TaskFormatError(
                    f"multiclass clip {relpath!r} must have exactly one label, "
                    f"got {len(indices)}"
                )
            if len(set(indices)) != len(indices):
                raise TaskFormatError(f"duplicate labels on clip {relpath!r}")
            clips.append(ClipRecord(relpath=relpath, split=split, scene_labels=indices))
    return clips


def events_from_json(items: list[dict], definition: TaskDefinition,
                     clip: str = "<unknown>") -> tuple[Event, ...]:
    """Parse one clip's event list from the events.*.json schema."""
    events = []
    for ev in items:
        try:
            start_ms, end_ms = float(ev["start_ms"]), float(ev["end_ms"])
        except (KeyError, TypeError, ValueError):
            raise MalformedEvent(
                f"clip {clip!r}: event {ev!r} lacks numeric start_ms/end_ms"
            ) from None
        if end_ms <= start_ms:
            raise MalformedEvent(
                f"clip {clip!r}: event offset {end_ms} ms <= onset {start_ms} ms"
            )
        events.append(
            Event(
                onset=start_ms / 1000.0,
                offset=end_ms / 1000.0,
                label=definition.label_index(ev["label"]),
            )
        )
    events.sort(key=lambda e: (e.onset, e.offset, e.label))
    return tuple(events)


def events_to_json(events, labels) -> list[dict]:
    """Serialize events to the events.*.json schema (times back to ms)."""
    return [
        {
            "start_ms": ev.onset * 1000.0,
            "end_ms": ev.offset * 1000.0,
            "label": labels[ev.label],
        }
        for ev in events
    ]


def _event_clips(definition: TaskDefinition, root: Path) -> list[ClipRecord]:
    clips = []
    for split in definition.splits:
        doc = _read_json(root / f"events.{split}.json")
        for relpath in sorted(doc):
            events = events_from_json(doc[relpath], definition, clip=relpath)
            clips.append(ClipRecord(relpath=relpath, split=split, events=events))
    return clips


def _check_stray_fold_files(definition: TaskDefinition, root: Path) -> None:
    if definition.split_method != KFOLD:
        return
    prefix = "labels." if definition.embedding_type == SCENE else "events."
    for path in root.glob(f"{prefix}fold*.json"):
        fold_name = path.name[len(prefix) : -len(".json")]
        try:
            fold_idx = int(fold_name.removeprefix("fold"))
        except ValueError:
            continue
        if fold_idx >= definition.k:
            doc = _read_json(path)
            clip = next(iter(sorted(doc)), "<empty>")
            raise FoldOutOfRange(
                f"{path.name} assigns clip {clip!r} to fold {fold_idx}, "
                f"but task {definition.name!r} has k={definition.k}"
            )


def _check_audio(definition: TaskDefinition, clips: list[ClipRecord], root: Path) -> None:
    for clip in clips:
        for sr in definition.sample_rates:
            wav_path = root / str(sr) / clip.split / clip.relpath
            if not wav_path.is_file():
                raise MissingAudioFile(f"missing audio file: {wav_path}")
            if definition.clip_duration_sec is not None:
                with wave.open(str(wav_path), "rb") as wav:
                    n_frames = wav.getnframes()
                expected = round(definition.clip_duration_sec * sr)
                if abs(n_frames - expected) > 1:
                    raise ClipDurationMismatch(
                        f"{wav_path}: {n_frames} samples, expected {expected} +/- 1 "
                        f"({definition.clip_duration_sec} s at {sr} Hz)"
                    )


def load_task(root_dir) -> LoadedTask:
    """Load and fully validate a task directory.

    Checks the metadata document, every label/event file, and that every
    referenced clip exists at every declared sample rate (with the declared
    fixed duration, where one is declared).  Raises a TaskFormatError
    subclass naming the offending file or clip otherwise.
    """
    root = Path(root_dir)
    definition = TaskDefinition.from_json(_read_json(root / "task.json"))
    _check_stray_fold_files(definition, root)
    if definition.embedding_type == SCENE:
        clips = _scene_clips(definition, root)
    else:
        clips = _event_clips(definition, root)
    _check_audio(definition, clips, root)
    clips.sort(key=lambda c: (c.split, c.relpath))
    return LoadedTask(definition=definition, clips=tuple(clips), root=root)


def write_task(task: LoadedTask, root_dir) -> None:
    """Write a task's metadata and label files (not audio) under ``root_dir``.

    With the audio tree in place, ``load_task(write_task(t))`` reproduces the
    in-memory model exactly; label order inside a clip is normalized on load.
    """
    root = Path(root_dir)
    root.mkdir(parents=True, exist_ok=True)
    definition = task.definition
    with open(root / "task.json", "w", encoding="utf-8") as fh:
        json.dump(definition.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for split in definition.splits:
        doc = {}
        for clip in task.clips_in(split):
            if definition.embedding_type == SCENE:
                doc[clip.relpath] = [definition.labels[i] for i in clip.scene_labels]
            else:
                doc[clip.relpath] = events_to_json(clip.events, definition.labels)
        name = "labels" if definition.embedding_type == SCENE else "events"
        with open(root / f"{name}.{split}.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
