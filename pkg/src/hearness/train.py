"""Downstream training over the deterministic hyperparameter grid.

For each grid point: Adam minimizes cross-entropy in mini-batches of 1024
(last partial batch kept) for up to 500 epochs, with the task metric
computed on the validation split every ``validation_check_interval_epochs``
epochs.  Training stops early after 20 validation checks without
improvement; the weights from the best check are retained (no retraining).
Timestamp tasks validate on the onset-only event F-measure after full
postprocessing, maximized over the two candidate minimum event durations
(125 / 250 ms); the winning duration is kept with the checkpoint.

Model selection picks the grid point with the highest best-validation score
(ties break toward earlier grid order) and evaluates it once on the test
partition.  K-fold tasks repeat the whole procedure per fold and average
the per-fold test scores.

Everything is bitwise deterministic for a fixed (task, embeddings, seed):
each (fold, grid point) derives its own RNG streams from the run seed.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from . import task as task_mod
from .embio import Embedding, SceneEmbedding, TimestampEmbedding
from .errors import AllGridPointsFailed, NonFiniteLoss
from .metrics import (
    FrameActivations,
    accuracy,
    auc_roc_ovr,
    event_fmeasure_corpus,
    frames_to_events,
    mean_average_precision,
    pitch_chroma_accuracy,
)
from .mlp import Adam, GridPoint, Mlp, NonFiniteActivation, make_grid

MAX_EPOCHS = 500
PATIENCE_CHECKS = 20
MIN_DURATION_CANDIDATES_MS = (125.0, 250.0)
MEDIAN_WINDOW_MS = 250.0
FRAME_THRESHOLD = 0.5


@dataclass(frozen=True)
class ValidationCheck:
    epoch: int
    score: float
    min_duration_ms: float | None = None  # timestamp tasks only


@dataclass
class TrainRecord:
    grid_index: int
    grid_point: GridPoint
    checks: list[ValidationCheck] = field(default_factory=list)
    epoch_losses: list[float] = field(default_factory=list)
    failed: bool = False
    best_epoch: int | None = None
    best_score: float | None = None
    stopped_epoch: int = 0

    def to_json(self) -> dict:
        return {
            "grid_index": self.grid_index,
            "hyperparameters": self.grid_point.to_json(),
            "failed": self.failed,
            "checks": [
                {
                    "epoch": c.epoch,
                    "score": c.score,
                    **(
                        {"min_duration_ms": c.min_duration_ms}
                        if c.min_duration_ms is not None
                        else {}
                    ),
                }
                for c in self.checks
            ],
            "best_epoch": self.best_epoch,
            "best_score": self.best_score,
            "stopped_epoch": self.stopped_epoch,
        }


@dataclass
class TrainedPredictor:
    mlp: Mlp
    grid_point: GridPoint
    grid_index: int
    best_score: float
    best_epoch: int
    min_duration_ms: float | None = None  # selected at the best check


# --- data assembly ---------------------------------------------------------


def frame_targets(events, timestamps: np.ndarray, n_labels: int) -> np.ndarray:
    """(T, C) binary targets: frame t carries every label whose event
    interval [onset, offset) contains timestamp t."""
    targets = np.zeros((timestamps.size, n_labels), dtype=np.float32)
    for ev in events:
        mask = (timestamps >= ev.onset) & (timestamps < ev.offset)
        targets[mask, ev.label] = 1.0
    return targets


@dataclass
class SceneData:
    x: np.ndarray
    y_int: np.ndarray  # class ids (argmax for multilabel, unused there)
    y_bin: np.ndarray  # (N, C) binary


@dataclass
class FrameData:
    x: np.ndarray  # all frames pooled
    y_bin: np.ndarray
    clip_order: list[str]
    clip_slices: list[slice]
    clip_timestamps: dict[str, np.ndarray]
    ref_events: dict[str, list]


def _scene_data(definition, clips, embeddings: dict[str, Embedding]) -> SceneData:
    vectors, y_int, y_bin = [], [], []
    n = definition.n_labels
    for clip in clips:
        emb = embeddings[clip.relpath]
        if not isinstance(emb, SceneEmbedding):
            raise TypeError(f"{clip.relpath}: expected a scene embedding")
        vectors.append(emb.vector)
        row = np.zeros(n, dtype=np.float32)
        row[list(clip.scene_labels)] = 1.0
        y_bin.append(row)
        y_int.append(clip.scene_labels[0])
    return SceneData(
        x=np.stack(vectors),
        y_int=np.asarray(y_int, dtype=np.int64),
        y_bin=np.stack(y_bin),
    )


def _frame_data(definition, clips, embeddings: dict[str, Embedding]) -> FrameData:
    mats, targets, order, slices, stamps, refs = [], [], [], [], {}, {}
    start = 0
    for clip in clips:
        emb = embeddings[clip.relpath]
        if not isinstance(emb, TimestampEmbedding):
            raise TypeError(f"{clip.relpath}: expected a timestamp embedding")
        mats.append(emb.matrix)
        targets.append(frame_targets(clip.events, emb.timestamps, definition.n_labels))
        order.append(clip.relpath)
        slices.append(slice(start, start + emb.n_frames))
        start += emb.n_frames
        stamps[clip.relpath] = emb.timestamps
        refs[clip.relpath] = list(clip.events)
    return FrameData(
        x=np.concatenate(mats),
        y_bin=np.concatenate(targets),
        clip_order=order,
        clip_slices=slices,
        clip_timestamps=stamps,
        ref_events=refs,
    )


# --- validation / test scoring ---------------------------------------------


def _scene_score(metric, probs: np.ndarray, data: SceneData) -> float:
    kind = metric.kind
    if kind in ("accuracy", "pitch_acc"):
        return accuracy(np.argmax(probs, axis=1), data.y_int)
    if kind == "mean_average_precision":
        return mean_average_precision(probs, data.y_bin)
    if kind == "aucroc":
        return auc_roc_ovr(probs, data.y_bin)
    raise ValueError(f"not a scene metric: {kind}")


def _predicted_events(probs: np.ndarray, data: FrameData, min_duration_ms: float):
    est = {}
    for relpath, sl in zip(data.clip_order, data.clip_slices):
        fa = FrameActivations(timestamps=data.clip_timestamps[relpath], probs=probs[sl])
        est[relpath] = frames_to_events(
            fa,
            threshold=FRAME_THRESHOLD,
            window_ms=MEDIAN_WINDOW_MS,
            min_duration_ms=min_duration_ms,
        )
    return est


def _timestamp_validation_score(metric, probs, data: FrameData) -> tuple[float, float]:
    """Onset-only F maximized over the candidate minimum event durations."""
    best_score, best_dur = -1.0, MIN_DURATION_CANDIDATES_MS[0]
    for dur in MIN_DURATION_CANDIDATES_MS:
        est = _predicted_events(probs, data, dur)
        scores = event_fmeasure_corpus(
            data.ref_events, est, onset_tol_ms=metric.onset_tolerance_ms
        )
        if scores.f > best_score:
            best_score, best_dur = scores.f, dur
    return best_score, best_dur


def _timestamp_test_scores(metric, probs, data: FrameData, min_duration_ms: float):
    est = _predicted_events(probs, data, min_duration_ms)
    onset_only = event_fmeasure_corpus(
        data.ref_events, est, onset_tol_ms=metric.onset_tolerance_ms
    )
    secondary = {
        "precision": onset_only.precision,
        "recall": onset_only.recall,
        "macro_f": onset_only.macro_f,
        "min_duration_ms": min_duration_ms,
    }
    if metric.kind == "onset_offset_fms":
        with_offset = event_fmeasure_corpus(
            data.ref_events,
            est,
            onset_tol_ms=metric.onset_tolerance_ms,
            require_offset=True,
            offset_tol_ms=metric.offset_tolerance_ms,
            duration_ratio=metric.duration_ratio,
        )
        secondary["onset_only_f"] = onset_only.f
        secondary["precision"] = with_offset.precision
        secondary["recall"] = with_offset.recall
        secondary["macro_f"] = with_offset.macro_f
        return with_offset.f, secondary
    return onset_only.f, secondary


def _scene_test_scores(metric, probs, data: SceneData):
    primary = _scene_score(metric, probs, data)
    secondary = {}
    if metric.kind == "pitch_acc":
        both = pitch_chroma_accuracy(np.argmax(probs, axis=1), data.y_int)
        secondary["chroma_acc"] = both["chroma_acc"]
    return primary, secondary


# --- the training loop ------------------------------------------------------


def train(
    definition: task_mod.TaskDefinition,
    gp: GridPoint,
    train_clips,
    val_clips,
    embeddings: dict[str, Embedding],
    seed: int,
    grid_index: int = 0,
    fold: int = 0,
    dtype=np.float32,
    max_epochs: int = MAX_EPOCHS,
) -> tuple[TrainedPredictor | None, TrainRecord]:
    """Train one grid point; returns (None, record) if training diverged."""
    timestamp_task = definition.embedding_type == task_mod.TIMESTAMP
    multilabel = timestamp_task or definition.predictor_type == task_mod.MULTILABEL
    head = "multilabel" if multilabel else "multiclass"

    if timestamp_task:
        train_data = _frame_data(definition, train_clips, embeddings)
        val_data = _frame_data(definition, val_clips, embeddings)
    else:
        train_data = _scene_data(definition, train_clips, embeddings)
        val_data = _scene_data(definition, val_clips, embeddings)
    x = np.asarray(train_data.x, dtype=dtype)
    targets = train_data.y_bin if multilabel else train_data.y_int
    x_val = np.asarray(val_data.x, dtype=dtype)

    ss = np.random.SeedSequence(entropy=seed, spawn_key=(fold, grid_index))
    init_ss, shuffle_ss, dropout_ss = ss.spawn(3)
    init_seed = int(init_ss.generate_state(1, dtype=np.uint64)[0])
    shuffle_rng = np.random.default_rng(shuffle_ss)
    dropout_rng = np.random.default_rng(dropout_ss)

    mlp = Mlp.from_grid_point(
        gp, in_dim=x.shape[1], out_dim=definition.n_labels, head=head,
        seed=init_seed, dtype=dtype,
    )
    adam = Adam(mlp.params, gp.learning_rate)
    record = TrainRecord(grid_index=grid_index, grid_point=gp)

    interval = definition.validation_check_interval_epochs
    best_state = None
    best = None
    best_min_dur = None
    stagnant = 0
    n = x.shape[0]

    try:
        for epoch in range(1, max_epochs + 1):
            perm = shuffle_rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, gp.batch_size):
                idx = perm[start : start + gp.batch_size]
                loss, grads = mlp.loss_and_grad(
                    x[idx], targets[idx], training=True, dropout_rng=dropout_rng
                )
                if not np.isfinite(loss):
                    raise NonFiniteLoss(f"loss diverged at epoch {epoch}")
                adam.step(mlp.params, grads)
                epoch_loss += loss * idx.size
            record.epoch_losses.append(epoch_loss / n)
            record.stopped_epoch = epoch

            if epoch % interval:
                continue
            probs = mlp.forward(x_val, training=False).astype(np.float64)
            if timestamp_task:
                score, min_dur = _timestamp_validation_score(
                    definition.metric, probs, val_data
                )
                record.checks.append(ValidationCheck(epoch, score, min_dur))
            else:
                score = _scene_score(definition.metric, probs, val_data)
                min_dur = None
                record.checks.append(ValidationCheck(epoch, score))
            if best is None or score > best:
                best = score
                stagnant = 0
                best_state = mlp.state_copy()
                record.best_epoch = epoch
                record.best_score = score
                if timestamp_task:
                    best_min_dur = min_dur
            else:
                stagnant += 1
                if stagnant >= PATIENCE_CHECKS:
                    break
    except (NonFiniteLoss, NonFiniteActivation):
        record.failed = True
        return None, record

    if best_state is None:  # no validation check ever ran
        record.failed = True
        return None, record
    mlp.load_state(best_state)
    predictor = TrainedPredictor(
        mlp=mlp,
        grid_point=gp,
        grid_index=grid_index,
        best_score=record.best_score,
        best_epoch=record.best_epoch,
        min_duration_ms=best_min_dur if timestamp_task else None,
    )
    return predictor, record


def run_grid(
    definition: task_mod.TaskDefinition,
    partitions: task_mod.Partitions,
    embeddings: dict[str, Embedding],
    seed: int,
    fold: int = 0,
    jobs: int = 1,
    dtype=np.float32,
    max_epochs: int = MAX_EPOCHS,
) -> list[tuple[TrainedPredictor | None, TrainRecord]]:
    """Train every grid point; results come back in deterministic grid order."""
    grid = make_grid(seed)

    def run_one(i_gp):
        i, gp = i_gp
        return train(
            definition, gp, partitions.train, partitions.validation, embeddings,
            seed=seed, grid_index=i, fold=fold, dtype=dtype, max_epochs=max_epochs,
        )

    items = list(enumerate(grid))
    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_one, items))
    return [run_one(item) for item in items]


def select_predictor(results) -> TrainedPredictor:
    """Highest best-validation score wins; ties break toward earlier grid order."""
    best = None
    for predictor, record in results:
        if record.failed or predictor is None:
            continue
        if best is None or predictor.best_score > best.best_score:
            best = predictor
    if best is None:
        raise AllGridPointsFailed("every grid point diverged")
    return best


def select_and_test(
    definition: task_mod.TaskDefinition,
    results,
    test_clips,
    embeddings: dict[str, Embedding],
    dtype=np.float32,
) -> tuple[TrainedPredictor, float, dict]:
    """Evaluate the selected grid point once on the test partition."""
    chosen = select_predictor(results)
    if definition.embedding_type == task_mod.TIMESTAMP:
        data = _frame_data(definition, test_clips, embeddings)
        probs = chosen.mlp.forward(
            np.asarray(data.x, dtype=dtype), training=False
        ).astype(np.float64)
        primary, secondary = _timestamp_test_scores(
            definition.metric, probs, data, chosen.min_duration_ms
        )
    else:
        data = _scene_data(definition, test_clips, embeddings)
        probs = chosen.mlp.forward(
            np.asarray(data.x, dtype=dtype), training=False
        ).astype(np.float64)
        primary, secondary = _scene_test_scores(definition.metric, probs, data)
    return chosen, primary, secondary


# --- whole-task evaluation --------------------------------------------------


@dataclass
class FoldResult:
    fold: int | None
    primary: float
    secondary: dict[str, float]
    selected_grid_index: int
    records: list[TrainRecord]


@dataclass
class TaskResult:
    task: str
    metric_kind: str
    primary: float
    secondary: dict[str, float]
    fold_scores: list[float]
    folds: list[FoldResult]

    def score_json(self, model: str) -> dict:
        return {
            "task": self.task,
            "model": model,
            "metric_kind": self.metric_kind,
            "primary_score": self.primary,
            "secondary_scores": self.secondary,
            "fold_scores": self.fold_scores,
        }

    def trainrecord_json(self, model: str, seed: int) -> dict:
        return {
            "task": self.task,
            "model": model,
            "seed": seed,
            "folds": [
                {
                    "fold": fr.fold,
                    "selected_grid_index": fr.selected_grid_index,
                    "grid": [r.to_json() for r in fr.records],
                }
                for fr in self.folds
            ],
        }


def _mean_secondary(per_fold: list[dict[str, float]]) -> dict[str, float]:
    keys = sorted({k for d in per_fold for k in d})
    return {k: float(np.mean([d[k] for d in per_fold if k in d])) for k in keys}


def evaluate_task(
    loaded: task_mod.LoadedTask,
    embeddings: dict[str, Embedding],
    seed: int,
    jobs: int = 1,
    dtype=np.float32,
    max_epochs: int = MAX_EPOCHS,
) -> TaskResult:
    """Grid-train, select, and test; k-fold tasks average per-fold test scores."""
    definition = loaded.definition
    if definition.split_method == task_mod.KFOLD:
        fold_ids = list(range(definition.k))
    else:
        fold_ids = [None]

    fold_results = []
    for fold in fold_ids:
        partitions = task_mod.resolve_partitions(loaded, fold)
        results = run_grid(
            definition, partitions, embeddings, seed=seed,
            fold=0 if fold is None else fold, jobs=jobs, dtype=dtype,
            max_epochs=max_epochs,
        )
        chosen, primary, secondary = select_and_test(
            definition, results, partitions.test, embeddings, dtype=dtype
        )
        fold_results.append(
            FoldResult(
                fold=fold,
                primary=primary,
                secondary=secondary,
                selected_grid_index=chosen.grid_index,
                records=[record for _, record in results],
            )
        )

    primaries = [fr.primary for fr in fold_results]
    return TaskResult(
        task=definition.name,
        metric_kind=definition.metric.kind,
        primary=float(np.mean(primaries)),
        secondary=_mean_secondary([fr.secondary for fr in fold_results]),
        fold_scores=primaries if len(fold_results) > 1 else [],
        folds=fold_results,
    )
