"""Task metrics.

Scene metrics: accuracy, pitch accuracy with a chroma (octave-equivalent)
secondary, mean average precision, AUCROC.  Timestamp metrics: the full
postprocessing pipeline (threshold, per-class median filter, run extraction,
minimum-duration pruning) followed by a tolerance-matched event F-measure
using maximum-cardinality one-to-one matching per class.

All functions here are pure and deterministic; micro (pooled over classes)
F-measure is the headline event score, with per-class and macro values
reported alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoPositivesAnywhere, SingleClassOnly
from .task import Event


# --- scene metrics --------------------------------------------------------


def accuracy(predicted, truth) -> float:
    """Fraction of positions where predicted == truth."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.size == 0:
        raise ValueError("predicted and truth must be non-empty and the same shape")
    return float(np.mean(predicted == truth))


def pitch_chroma_accuracy(predicted, truth) -> dict[str, float]:
    """Exact pitch accuracy plus chroma accuracy (correct modulo 12 semitones).

    Indices are positions in a pitch vocabulary ordered by semitone, so an
    index difference equals a semitone difference.
    """
    predicted = np.asarray(predicted, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predicted.shape != truth.shape or predicted.size == 0:
        raise ValueError("predicted and truth must be non-empty and the same shape")
    return {
        "pitch_acc": float(np.mean(predicted == truth)),
        "chroma_acc": float(np.mean((predicted - truth) % 12 == 0)),
    }


def _average_precision(scores: np.ndarray, truth: np.ndarray) -> float:
    # Descending by score; ties keep input order (stable sort on -scores).
    order = np.argsort(-scores, kind="stable")
    hits = truth[order].astype(np.float64)
    n_pos = hits.sum()
    cum_hits = np.cumsum(hits)
    ranks = np.arange(1, scores.size + 1)
    precision_at_pos = (cum_hits / ranks)[hits > 0]
    return float(precision_at_pos.sum() / n_pos)


def mean_average_precision(scores, truth) -> float:
    """Non-interpolated mAP over classes that have at least one positive.

    scores: (N, C) real-valued; truth: (N, C) binary.  Per class, AP is the
    mean of precision values at each positive's rank when items are sorted
    by descending score (ties broken by stable input order).
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if scores.ndim != 2 or scores.shape != truth.shape:
        raise ValueError("scores and truth must both be (N, C)")
    aps = [
        _average_precision(scores[:, c], truth[:, c])
        for c in range(scores.shape[1])
        if truth[:, c].any()
    ]
    if not aps:
        raise NoPositivesAnywhere("no class has a positive example")
    return float(np.mean(aps))


def auc_roc(scores, truth) -> float:
    """Mann-Whitney AUCROC: P(pos scored above neg), ties counting half."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth).astype(bool)
    pos = scores[truth]
    neg = scores[~truth]
    if pos.size == 0 or neg.size == 0:
        raise SingleClassOnly("AUCROC needs both positive and negative examples")
    diff = pos[:, None] - neg[None, :]
    wins = np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0)
    return float(wins / (pos.size * neg.size))


def auc_roc_ovr(scores, truth) -> float:
    """Macro one-vs-rest AUCROC over classes with both positives and negatives."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if scores.ndim != 2 or scores.shape != truth.shape:
        raise ValueError("scores and truth must both be (N, C)")
    per_class = []
    for c in range(scores.shape[1]):
        col = truth[:, c].astype(bool)
        if col.any() and not col.all():
            per_class.append(auc_roc(scores[:, c], col))
    if not per_class:
        raise SingleClassOnly("no class has both positive and negative examples")
    return float(np.mean(per_class))


# --- timestamp pipeline ---------------------------------------------------


@dataclass(frozen=True)
class FrameActivations:
    """Per-frame class probabilities at regular timesteps."""

    timestamps: np.ndarray  # (T,) seconds
    probs: np.ndarray  # (T, C) in [0, 1]

    def __post_init__(self):
        ts = np.ascontiguousarray(self.timestamps, dtype=np.float64)
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if ts.ndim != 1 or probs.ndim != 2 or ts.shape[0] != probs.shape[0]:
            raise ValueError("timestamps (T,) must match probs (T, C)")
        if probs.size and (probs.min() < 0.0 or probs.max() > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "probs", probs)


def median_filter(track, window_ms: float = 250.0, hop_ms: float = 50.0) -> np.ndarray:
    """Sliding odd-length median over a binary frame track.

    The window covers round(window_ms / hop_ms) frames, adjusted up to the
    next odd count; at the edges the window shrinks symmetrically so the
    median always sees an odd number of frames.
    """
    track = np.asarray(track)
    if track.ndim != 1:
        raise ValueError("median_filter expects a 1-D track")
    width = max(1, round(window_ms / hop_ms))
    if width % 2 == 0:
        width += 1
    if width == 1 or track.size <= 1:
        return track.copy()
    half = width // 2
    n = track.size
    out = np.empty_like(track)
    for i in range(n):
        h = min(i, n - 1 - i, half)
        out[i] = np.median(track[i - h : i + h + 1])
    return out


def _runs(active: np.ndarray):
    """Yield (start, stop) index pairs of maximal runs of ones; stop exclusive."""
    padded = np.concatenate(([0], active.astype(np.int8), [0]))
    delta = np.diff(padded)
    starts = np.flatnonzero(delta == 1)
    stops = np.flatnonzero(delta == -1)
    return zip(starts, stops)


def frames_to_events(
    fa: FrameActivations,
    threshold: float = 0.5,
    window_ms: float = 250.0,
    min_duration_ms: float = 250.0,
    hop_ms: float | None = None,
) -> list[Event]:
    """Extract discrete labeled events from frame activations.

    Per class: binarize at ``threshold``, median-filter over ``window_ms``,
    take maximal runs of active frames.  A run becomes an event spanning
    [first frame timestamp, last frame timestamp + hop); events shorter than
    ``min_duration_ms`` are dropped.  ``hop_ms`` is inferred from the
    timestamps when not given.
    """
    if hop_ms is None:
        if fa.timestamps.size < 2:
            raise ValueError("cannot infer hop from fewer than 2 frames; pass hop_ms")
        hop_ms = float(fa.timestamps[1] - fa.timestamps[0]) * 1000.0
    hop_sec = hop_ms / 1000.0
    min_duration_sec = min_duration_ms / 1000.0

    events = []
    for c in range(fa.probs.shape[1]):
        active = fa.probs[:, c] >= threshold
        filtered = median_filter(active.astype(np.float64), window_ms, hop_ms) > 0.5
        for start, stop in _runs(filtered):
            onset = float(fa.timestamps[start])
            offset = float(fa.timestamps[stop - 1]) + hop_sec
            if offset - onset < min_duration_sec:
                continue
            events.append(Event(onset=onset, offset=offset, label=c))
    events.sort(key=lambda e: (e.onset, e.offset, e.label))
    return events


# --- event matching and F-measure ----------------------------------------


def _max_bipartite_matching(adj: list[list[int]], n_right: int) -> int:
    """Maximum-cardinality matching size via Kuhn's augmenting paths."""
    match_right = [-1] * n_right

    def try_augment(u: int, seen: list[bool]) -> bool:
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                if match_right[v] == -1 or try_augment(match_right[v], seen):
                    match_right[v] = u
                    return True
        return False

    size = 0
    for u in range(len(adj)):
        if try_augment(u, [False] * n_right):
            size += 1
    return size


def _matchable(ref: Event, est: Event, onset_tol_sec: float,
               require_offset: bool, offset_tol_sec: float, dur_ratio: float) -> bool:
    if abs(est.onset - ref.onset) > onset_tol_sec:
        return False
    if require_offset:
        allowed = max(offset_tol_sec, dur_ratio * (ref.offset - ref.onset))
        if abs(est.offset - ref.offset) > allowed:
            return False
    return True


@dataclass(frozen=True)
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "ClassCounts") -> "ClassCounts":
        return ClassCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    if tp + fp + fn == 0:
        return 1.0, 1.0, 1.0  # nothing to detect, nothing detected
    f = 2.0 * tp / (2.0 * tp + fp + fn)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return f, precision, recall


@dataclass(frozen=True)
class EventScores:
    """Pooled (micro) event F-measure plus per-class and macro views."""

    f: float
    precision: float
    recall: float
    per_class: dict[int, ClassCounts] = field(default_factory=dict)

    @property
    def macro_f(self) -> float:
        if not self.per_class:
            return 1.0
        return float(np.mean([_prf(c.tp, c.fp, c.fn)[0] for c in self.per_class.values()]))


def match_events_per_class(
    ref: list[Event],
    est: list[Event],
    onset_tol_ms: float,
    require_offset: bool = False,
    offset_tol_ms: float = 50.0,
    duration_ratio: float = 0.2,
) -> dict[int, ClassCounts]:
    """Per-class TP/FP/FN using maximum-cardinality one-to-one matching.

    A (ref, est) pair of the same class is matchable iff the onset
    difference is within ``onset_tol_ms`` and, when ``require_offset``, the
    offset difference is within max(offset_tol_ms, duration_ratio * ref
    duration).  Maximum matching keeps scores independent of input order.
    """
    onset_tol = onset_tol_ms / 1000.0
    offset_tol = offset_tol_ms / 1000.0
    counts: dict[int, ClassCounts] = {}
    labels = sorted({e.label for e in ref} | {e.label for e in est})
    for label in labels:
        ref_c = [e for e in ref if e.label == label]
        est_c = [e for e in est if e.label == label]
        adj = [
            [
                j
                for j, e in enumerate(est_c)
                if _matchable(r, e, onset_tol, require_offset, offset_tol, duration_ratio)
            ]
            for r in ref_c
        ]
        tp = _max_bipartite_matching(adj, len(est_c))
        counts[label] = ClassCounts(tp=tp, fp=len(est_c) - tp, fn=len(ref_c) - tp)
    return counts


def _scores_from_counts(per_class: dict[int, ClassCounts]) -> EventScores:
    tp = sum(c.tp for c in per_class.values())
    fp = sum(c.fp for c in per_class.values())
    fn = sum(c.fn for c in per_class.values())
    f, precision, recall = _prf(tp, fp, fn)
    return EventScores(f=f, precision=precision, recall=recall, per_class=per_class)


def event_fmeasure(
    ref: list[Event],
    est: list[Event],
    onset_tol_ms: float,
    require_offset: bool = False,
    offset_tol_ms: float = 50.0,
    duration_ratio: float = 0.2,
) -> EventScores:
    """Tolerance-matched event F-measure on one timeline.

    F is pooled over classes (micro): F = 2TP / (2TP + FP + FN).  Both sides
    empty scores 1.0; exactly one side empty scores 0.0.
    """
    per_class = match_events_per_class(
        ref, est, onset_tol_ms, require_offset, offset_tol_ms, duration_ratio
    )
    return _scores_from_counts(per_class)


def event_fmeasure_corpus(
    ref_by_clip: dict[str, list[Event]],
    est_by_clip: dict[str, list[Event]],
    onset_tol_ms: float,
    require_offset: bool = False,
    offset_tol_ms: float = 50.0,
    duration_ratio: float = 0.2,
) -> EventScores:
    """Event F-measure pooled over a corpus; events match only within a clip."""
    total: dict[int, ClassCounts] = {}
    for clip in sorted(set(ref_by_clip) | set(est_by_clip)):
        per_class = match_events_per_class(
            ref_by_clip.get(clip, []),
            est_by_clip.get(clip, []),
            onset_tol_ms,
            require_offset,
            offset_tol_ms,
            duration_ratio,
        )
        for label, counts in per_class.items():
            total[label] = total.get(label, ClassCounts()) + counts
    return _scores_from_counts(total)
