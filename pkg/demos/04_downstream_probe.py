"""Training the shallow probe over the deterministic hyperparameter grid.

Builds separable Gaussian blobs as stand-in frozen embeddings, draws the 8
deterministic grid points from the 16-point lattice, trains each with
early stopping on the validation score, then selects and tests.
"""

import numpy as np

from hearness import task as task_mod
from hearness.embio import SceneEmbedding
from hearness.mlp import grid_lattice, make_grid
from hearness.task import ClipRecord, MetricSpec, Partitions, TaskDefinition
from hearness.train import run_grid, select_and_test

rng = np.random.default_rng(0)
N_CLASSES, DIM = 3, 64
centers = rng.normal(0, 4.0, size=(N_CLASSES, DIM))

definition = TaskDefinition(
    name="demo-blobs",
    embedding_type=task_mod.SCENE,
    predictor_type=task_mod.MULTICLASS,
    split_method=task_mod.TRAIN_VAL_TEST,
    sample_rates=(16000,),
    clip_duration_sec=1.0,
    metric=MetricSpec(kind="accuracy"),
    labels=("red", "green", "blue"),
)

def blob_split(split, count):
    clips, embeddings = [], {}
    for i in range(count):
        cls = i % N_CLASSES
        name = f"{split}{i:04d}.wav"
        clips.append(ClipRecord(name, split, scene_labels=(cls,)))
        vec = centers[cls] + rng.normal(0, 0.6, DIM)
        embeddings[name] = SceneEmbedding(vec.astype(np.float32))
    return tuple(clips), embeddings

train_clips, emb = blob_split("train", 360)
val_clips, more = blob_split("valid", 120)
test_clips, rest = blob_split("test", 120)
emb.update(more)
emb.update(rest)

print(f"hyperparameter lattice: {len(grid_lattice())} points "
      f"(2 layer counts x 4 learning rates x 2 inits)")
grid = make_grid(seed=42)
print(f"seed 42 selects {len(grid)} of them:")
for i, gp in enumerate(grid):
    print(f"  [{i}] layers={gp.hidden_layers} lr={gp.learning_rate:<7} init={gp.init}")

partitions = Partitions(train=train_clips, validation=val_clips, test=test_clips)
results = run_grid(definition, partitions, emb, seed=42, max_epochs=60)

print("\nper-point validation history (score at each 3-epoch check):")
for predictor, record in results:
    status = "failed" if record.failed else (
        f"best {record.best_score:.3f} at epoch {record.best_epoch}"
    )
    print(f"  [{record.grid_index}] {len(record.checks)} checks, {status}")

chosen, primary, secondary = select_and_test(definition, results, test_clips, emb)
print(f"\nselected grid point [{chosen.grid_index}] "
      f"(val {chosen.best_score:.3f}) -> test accuracy {primary:.3f}")
