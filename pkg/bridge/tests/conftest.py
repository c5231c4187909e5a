import numpy as np
import pytest

# the fixture tasks come from the evaluation harness; the bridge under test
# never imports it, but the tests exercise both ends of the file contract
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


def _materialize(root, definition, clips, seconds):
    loaded = LoadedTask(definition=definition, clips=tuple(clips), root=root)
    write_task(loaded, root)
    rng = np.random.default_rng(17)
    for clip in clips:
        samples = rng.uniform(-0.5, 0.5, round(seconds * SR))
        write_wav(root / str(SR) / clip.split / clip.relpath, samples, SR)
    return root


@pytest.fixture
def scene_task_dir(tmp_path):
    definition = TaskDefinition(
        name="bridge-scene",
        embedding_type=task_mod.SCENE,
        predictor_type=task_mod.MULTICLASS,
        split_method=task_mod.TRAIN_VAL_TEST,
        sample_rates=(SR,),
        clip_duration_sec=0.2,
        metric=MetricSpec(kind="accuracy"),
        labels=("a", "b"),
    )
    clips = [
        ClipRecord(f"clip{i}.wav", split, scene_labels=(i % 2,))
        for split, count in (("train", 3), ("valid", 2), ("test", 2))
        for i in range(count)
    ]
    # relpaths repeat across splits above; disambiguate
    clips = [
        ClipRecord(f"{c.split}_{c.relpath}", c.split, scene_labels=c.scene_labels)
        for c in clips
    ]
    return _materialize(tmp_path / "bridge-scene", definition, clips, 0.2)


@pytest.fixture
def timestamp_task_dir(tmp_path):
    definition = TaskDefinition(
        name="bridge-events",
        embedding_type=task_mod.TIMESTAMP,
        predictor_type=task_mod.MULTILABEL,
        split_method=task_mod.TRAIN_VAL_TEST,
        sample_rates=(SR,),
        clip_duration_sec=0.5,
        metric=MetricSpec(kind="onset_fms", onset_tolerance_ms=200.0),
        labels=("z",),
    )
    clips = [
        ClipRecord(f"{split}_e{i}.wav", split, events=(Event(0.1, 0.3, 0),))
        for split in ("train", "valid", "test")
        for i in range(2)
    ]
    return _materialize(tmp_path / "bridge-events", definition, clips, 0.5)
