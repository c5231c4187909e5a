import numpy as np
import pytest

from hearness import task as task_mod
from hearness.fixtures import write_wav
from hearness.task import (
    ClipRecord,
    Event,
    LoadedTask,
    MetricSpec,
    TaskDefinition,
    write_task,
)

SR = 16000


def build_task_dir(root, definition, clips, seconds=0.2, write_audio=True):
    """Materialize a task directory: metadata, labels, and (tiny) audio."""
    loaded = LoadedTask(definition=definition, clips=tuple(clips), root=root)
    write_task(loaded, root)
    if write_audio:
        rng = np.random.default_rng(0)
        for clip in clips:
            for sr in definition.sample_rates:
                samples = rng.normal(0, 0.1, round(seconds * sr))
                write_wav(root / str(sr) / clip.split / clip.relpath, samples, sr)
    return loaded


@pytest.fixture
def tiny_scene_task(tmp_path):
    definition = TaskDefinition(
        name="toy-scene",
        embedding_type=task_mod.SCENE,
        predictor_type=task_mod.MULTICLASS,
        split_method=task_mod.TRAIN_VAL_TEST,
        sample_rates=(SR,),
        clip_duration_sec=0.2,
        metric=MetricSpec(kind="accuracy"),
        labels=("cat", "dog"),
    )
    clips = [
        ClipRecord("a.wav", "train", scene_labels=(0,)),
        ClipRecord("b.wav", "train", scene_labels=(1,)),
        ClipRecord("c.wav", "valid", scene_labels=(0,)),
        ClipRecord("d.wav", "test", scene_labels=(1,)),
    ]
    root = tmp_path / "toy-scene"
    build_task_dir(root, definition, clips)
    return root


@pytest.fixture
def tiny_kfold_task(tmp_path):
    definition = TaskDefinition(
        name="toy-folds",
        embedding_type=task_mod.SCENE,
        predictor_type=task_mod.MULTICLASS,
        split_method=task_mod.KFOLD,
        k=5,
        sample_rates=(SR,),
        clip_duration_sec=0.2,
        metric=MetricSpec(kind="accuracy"),
        labels=("x", "y"),
    )
    clips = [
        ClipRecord(f"clip{i:02d}.wav", f"fold{i % 5}", scene_labels=(i % 2,))
        for i in range(10)
    ]
    root = tmp_path / "toy-folds"
    build_task_dir(root, definition, clips)
    return root


@pytest.fixture
def tiny_event_task(tmp_path):
    definition = TaskDefinition(
        name="toy-events",
        embedding_type=task_mod.TIMESTAMP,
        predictor_type=task_mod.MULTILABEL,
        split_method=task_mod.TRAIN_VAL_TEST,
        sample_rates=(SR,),
        clip_duration_sec=1.0,
        metric=MetricSpec(kind="onset_fms", onset_tolerance_ms=200.0),
        labels=("beep", "boop"),
    )
    clips = [
        ClipRecord(
            "e0.wav", "train",
            events=(Event(0.1, 0.5, 0), Event(0.6, 0.9, 1)),
        ),
        ClipRecord("e1.wav", "valid", events=(Event(0.2, 0.7, 0),)),
        ClipRecord("e2.wav", "test", events=(Event(0.25, 0.75, 1),)),
    ]
    root = tmp_path / "toy-events"
    build_task_dir(root, definition, clips, seconds=1.0)
    return root
