import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hearness import metrics
from hearness.errors import NoPositivesAnywhere, SingleClassOnly
from hearness.metrics import (
    FrameActivations,
    accuracy,
    auc_roc,
    auc_roc_ovr,
    event_fmeasure,
    event_fmeasure_corpus,
    frames_to_events,
    match_events_per_class,
    mean_average_precision,
    median_filter,
    pitch_chroma_accuracy,
)
from hearness.task import Event


# --- brute-force oracles (independent of the implementation) ---------------


def ap_oracle(scores, truth):
    """AP straight from the definition: walk the ranking, average precision
    at each positive."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    hits = 0
    precisions = []
    for rank, idx in enumerate(order, start=1):
        if truth[idx]:
            hits += 1
            precisions.append(hits / rank)
    return sum(precisions) / sum(truth)


def map_oracle(scores, truth):
    aps = [
        ap_oracle(scores[:, c], truth[:, c])
        for c in range(scores.shape[1])
        if truth[:, c].any()
    ]
    return sum(aps) / len(aps)


def auc_oracle(scores, truth):
    pos = [s for s, t in zip(scores, truth) if t]
    neg = [s for s, t in zip(scores, truth) if not t]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def max_matching_oracle(adj, n_right):
    """Exhaustive max-cardinality matching: try every injective assignment."""
    n_left = len(adj)

    def best(i, used):
        if i == n_left:
            return 0
        skip = best(i + 1, used)
        take = 0
        for j in adj[i]:
            if not used & (1 << j):
                take = max(take, 1 + best(i + 1, used | (1 << j)))
        return max(skip, take)

    return best(0, 0)


# --- accuracy ----------------------------------------------------------------


def test_accuracy_identical_and_disjoint():
    assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert accuracy([1, 2, 3], [4, 5, 6]) == 0.0


def test_accuracy_two_thirds():
    assert accuracy(["a", "b", "b"], ["a", "b", "c"]) == pytest.approx(2 / 3)


# --- pitch / chroma ------------------------------------------------------------


def test_chroma_one_octave_apart():
    # vocabulary index == semitone offset; 12 apart = same chroma
    out = pitch_chroma_accuracy([39], [51])  # MIDI 60 vs 72 at offset 21
    assert out["pitch_acc"] == 0.0
    assert out["chroma_acc"] == 1.0


def test_pitch_exact_match():
    out = pitch_chroma_accuracy([5, 17, 60], [5, 17, 60])
    assert out == {"pitch_acc": 1.0, "chroma_acc": 1.0}


def test_eleven_semitones_wrong_both_ways():
    out = pitch_chroma_accuracy([40], [51])  # MIDI 61 vs 72
    assert out == {"pitch_acc": 0.0, "chroma_acc": 0.0}


# --- mAP -----------------------------------------------------------------------


def test_map_perfect_ranking_is_one():
    scores = np.array([[0.9, 0.8], [0.7, 0.9], [0.1, 0.2], [0.2, 0.1]])
    truth = np.array([[1, 1], [1, 1], [0, 0], [0, 0]])
    assert mean_average_precision(scores, truth) == 1.0


def test_map_hand_enumerated_example():
    scores = np.array([[0.9], [0.8], [0.7]])
    truth = np.array([[1], [0], [1]])
    assert mean_average_precision(scores, truth) == pytest.approx((1.0 + 2 / 3) / 2)


def test_map_matches_bruteforce_on_random_instances():
    rng = np.random.default_rng(17)
    for _ in range(200):
        n, c = int(rng.integers(2, 9)), int(rng.integers(1, 4))
        scores = rng.random((n, c))
        truth = rng.random((n, c)) < 0.4
        if not truth.any():
            truth[0, 0] = True
        assert mean_average_precision(scores, truth) == pytest.approx(
            map_oracle(scores, truth), abs=1e-12
        )


def test_map_no_positives_anywhere():
    with pytest.raises(NoPositivesAnywhere):
        mean_average_precision(np.random.rand(3, 2), np.zeros((3, 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_map_invariant_under_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    scores = rng.random((6, 2))
    truth = rng.random((6, 2)) < 0.5
    if not truth.any():
        truth[0, 0] = True
    a = mean_average_precision(scores, truth)
    b = mean_average_precision(np.exp(3 * scores) + 1, truth)
    assert a == pytest.approx(b, abs=1e-12)


# --- AUCROC ----------------------------------------------------------------------


def test_auc_perfectly_separated_and_all_ties():
    assert auc_roc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert auc_roc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5


def test_auc_pairwise_enumeration_example():
    assert auc_roc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)


def test_auc_matches_bruteforce_on_random_instances():
    rng = np.random.default_rng(23)
    for _ in range(200):
        n = int(rng.integers(3, 12))
        scores = np.round(rng.random(n), 1)  # rounding provokes ties
        truth = rng.random(n) < 0.5
        if truth.all() or not truth.any():
            truth[0] = not truth[0]
        assert auc_roc(scores, truth) == pytest.approx(
            auc_oracle(scores, truth), abs=1e-12
        )


def test_auc_single_class_error():
    with pytest.raises(SingleClassOnly):
        auc_roc([0.1, 0.2], [1, 1])


def test_auc_ovr_macro():
    scores = np.array([[0.9, 0.1], [0.2, 0.8], [0.7, 0.3]])
    truth = np.array([[1, 0], [0, 1], [0, 1]])
    expected = (auc_oracle(scores[:, 0], truth[:, 0]) + auc_oracle(scores[:, 1], truth[:, 1])) / 2
    assert auc_roc_ovr(scores, truth) == pytest.approx(expected)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_auc_invariant_under_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    scores = rng.random(8)
    truth = rng.random(8) < 0.5
    if truth.all() or not truth.any():
        truth[0] = not truth[0]
    a = auc_roc(scores, truth)
    b = auc_roc(2 * scores**3 + 5, truth)
    assert a == pytest.approx(b, abs=1e-12)


# --- median filter -----------------------------------------------------------------


def test_median_filter_removes_isolated_spike():
    track = np.zeros(9)
    track[4] = 1.0
    out = median_filter(track, window_ms=250, hop_ms=50)  # 5-frame window
    assert np.all(out == 0.0)


def test_median_filter_constant_track_unchanged():
    for value in (0.0, 1.0):
        track = np.full(11, value)
        assert np.array_equal(median_filter(track, 250, 50), track)


def test_median_filter_window3_trace():
    track = np.array([0, 1, 1, 1, 0, 0, 1, 0], dtype=float)
    out = median_filter(track, window_ms=150, hop_ms=50)
    assert out.astype(int).tolist() == [0, 1, 1, 1, 0, 0, 0, 0]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from([0.0, 1.0]), min_size=1, max_size=24))
def test_median_filter_matches_naive_window_oracle(track):
    import statistics

    track = np.asarray(track)
    out = median_filter(track, 250, 50)  # 5-frame window
    half = 2
    for i in range(track.size):
        h = min(i, track.size - 1 - i, half)
        expected = statistics.median(track[i - h : i + h + 1].tolist())
        assert out[i] == expected


# --- frames_to_events ----------------------------------------------------------------


def _fa(active_spans, n_frames=20, n_classes=1, hop=0.05):
    ts = np.arange(n_frames) * hop
    probs = np.zeros((n_frames, n_classes))
    for cls, start, stop in active_spans:
        probs[start:stop, cls] = 1.0
    return FrameActivations(ts, probs)


def test_frames_to_events_convention_trace():
    events = frames_to_events(_fa([(0, 3, 8)]), min_duration_ms=125)
    assert len(events) == 1
    assert events[0].onset == pytest.approx(0.15)
    assert events[0].offset == pytest.approx(0.40)


def test_all_below_threshold_gives_no_events():
    fa = FrameActivations(np.arange(10) * 0.05, np.full((10, 2), 0.49))
    assert frames_to_events(fa) == []


def test_gap_of_one_filtered_frame_merges_runs():
    events = frames_to_events(_fa([(0, 2, 5), (0, 6, 9)]), window_ms=150, min_duration_ms=125)
    assert len(events) == 1
    assert events[0].onset == pytest.approx(0.10)
    assert events[0].offset == pytest.approx(0.45)


def test_min_duration_250_is_subset_of_125():
    rng = np.random.default_rng(31)
    for _ in range(50):
        probs = (rng.random((40, 3)) < 0.45).astype(float)
        fa = FrameActivations(np.arange(40) * 0.05, probs)
        small = frames_to_events(fa, min_duration_ms=125)
        large = frames_to_events(fa, min_duration_ms=250)
        assert set(large) <= set(small)


def test_short_event_dropped():
    events = frames_to_events(_fa([(0, 3, 10)]), min_duration_ms=125)
    assert events  # 7 frames = 350 ms survives
    # a 2-frame run (100 ms) is both median-filtered away and too short
    assert frames_to_events(_fa([(0, 3, 5)]), min_duration_ms=125) == []


# --- event F-measure --------------------------------------------------------------------


def ev(onset, offset=None, label=0):
    return Event(onset=onset, offset=offset if offset is not None else onset + 0.3, label=label)


def test_onset_within_tolerance_matches():
    out = event_fmeasure([ev(1.00)], [ev(1.15)], onset_tol_ms=200)
    assert out.f == 1.0


def test_onset_outside_tolerance_fails():
    out = event_fmeasure([ev(1.00)], [ev(1.25)], onset_tol_ms=200)
    assert out.f == 0.0


def test_empty_side_conventions():
    assert event_fmeasure([], [], onset_tol_ms=200).f == 1.0
    assert event_fmeasure([ev(1.0)], [], onset_tol_ms=200).f == 0.0
    assert event_fmeasure([], [ev(1.0)], onset_tol_ms=200).f == 0.0


def test_offset_rule_uses_max_of_tolerance_and_duration_ratio():
    # ref duration 2.0 s -> offset tolerance max(50 ms, 0.2 * 2.0 s) = 400 ms
    ref = [Event(1.0, 3.0, 0)]
    est_ok = [Event(1.01, 3.35, 0)]
    est_bad = [Event(1.01, 3.45, 0)]
    assert event_fmeasure(ref, est_ok, 200, require_offset=True).f == 1.0
    assert event_fmeasure(ref, est_bad, 200, require_offset=True).f == 0.0
    # short ref: duration 0.1 s -> tolerance is the 50 ms floor
    ref = [Event(1.0, 1.1, 0)]
    assert event_fmeasure(ref, [Event(1.0, 1.14, 0)], 200, require_offset=True).f == 1.0
    assert event_fmeasure(ref, [Event(1.0, 1.16, 0)], 200, require_offset=True).f == 0.0


def test_matching_is_one_to_one():
    # two est events close to one ref: only one can match
    out = event_fmeasure([ev(1.0)], [ev(1.05), ev(0.95)], onset_tol_ms=200)
    per = out.per_class[0]
    assert (per.tp, per.fp, per.fn) == (1, 1, 0)


def test_matching_cardinality_equals_exhaustive_oracle():
    rng = np.random.default_rng(41)
    for _ in range(200):
        n_ref = int(rng.integers(0, 7))
        n_est = int(rng.integers(0, 7))
        ref = [ev(rng.uniform(0, 3), label=int(rng.integers(0, 3))) for _ in range(n_ref)]
        est = [ev(rng.uniform(0, 3), label=int(rng.integers(0, 3))) for _ in range(n_est)]
        counts = match_events_per_class(ref, est, onset_tol_ms=200)
        for label in {e.label for e in ref} | {e.label for e in est}:
            ref_c = [e for e in ref if e.label == label]
            est_c = [e for e in est if e.label == label]
            adj = [
                [j for j, e in enumerate(est_c) if abs(e.onset - r.onset) <= 0.2]
                for r in ref_c
            ]
            assert counts[label].tp == max_matching_oracle(adj, len(est_c))


def test_tp_bounded_by_smaller_side():
    rng = np.random.default_rng(43)
    for _ in range(50):
        ref = [ev(rng.uniform(0, 2), label=0) for _ in range(int(rng.integers(0, 6)))]
        est = [ev(rng.uniform(0, 2), label=0) for _ in range(int(rng.integers(0, 6)))]
        counts = match_events_per_class(ref, est, onset_tol_ms=300)
        if 0 in counts:
            assert counts[0].tp <= min(len(ref), len(est))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_fmeasure_symmetric_under_swap(seed):
    rng = np.random.default_rng(seed)
    ref = [ev(rng.uniform(0, 2), label=int(rng.integers(0, 2))) for _ in range(4)]
    est = [ev(rng.uniform(0, 2), label=int(rng.integers(0, 2))) for _ in range(3)]
    fwd = event_fmeasure(ref, est, onset_tol_ms=250)
    rev = event_fmeasure(est, ref, onset_tol_ms=250)
    assert fwd.f == pytest.approx(rev.f, abs=1e-12)
    assert fwd.precision == pytest.approx(rev.recall, abs=1e-12)
    assert fwd.recall == pytest.approx(rev.precision, abs=1e-12)


def test_corpus_pooling_keeps_clips_separate():
    ref = {"a": [ev(1.0)], "b": [ev(2.0)]}
    est_same_clip = {"a": [ev(1.0)], "b": [ev(2.0)]}
    est_cross_clip = {"a": [ev(2.0)], "b": [ev(1.0)]}
    assert event_fmeasure_corpus(ref, est_same_clip, 200).f == 1.0
    assert event_fmeasure_corpus(ref, est_cross_clip, 200).f == 0.0


def test_event_lists_round_trip_through_label_file_schema():
    """Golden-file style: events serialized to the events.*.json schema,
    parsed back, and scored, with frozen expected counts."""
    import json

    from hearness import task as task_mod
    from hearness.task import MetricSpec, TaskDefinition, events_from_json, events_to_json

    definition = TaskDefinition(
        name="golden",
        embedding_type=task_mod.TIMESTAMP,
        predictor_type=task_mod.MULTILABEL,
        split_method=task_mod.TRAIN_VAL_TEST,
        sample_rates=(16000,),
        clip_duration_sec=None,
        metric=MetricSpec(kind="onset_fms", onset_tolerance_ms=200.0),
        labels=("siren", "dog"),
    )
    ref = [Event(0.5, 1.0, 0), Event(2.0, 2.6, 1), Event(4.0, 4.4, 1)]
    est_doc = json.loads(json.dumps(events_to_json(
        [Event(0.62, 1.05, 0), Event(2.35, 2.9, 1), Event(5.1, 5.5, 1)],
        definition.labels,
    )))
    est = list(events_from_json(est_doc, definition))
    out = event_fmeasure(ref, est, onset_tol_ms=200.0)
    # frozen: siren matches (120 ms off), first dog misses by 350 ms, third unmatched
    assert (out.per_class[0].tp, out.per_class[0].fp, out.per_class[0].fn) == (1, 0, 0)
    assert (out.per_class[1].tp, out.per_class[1].fp, out.per_class[1].fn) == (0, 2, 2)
    assert out.f == pytest.approx(2 * 1 / (2 * 1 + 2 + 2))


def test_micro_vs_macro_reporting():
    # class 0: 1 TP of 1; class 1: 0 TP of 3 refs
    ref = [ev(1.0, label=0)] + [ev(t, label=1) for t in (3.0, 5.0, 7.0)]
    est = [ev(1.0, label=0)]
    out = event_fmeasure(ref, est, onset_tol_ms=200)
    assert out.f == pytest.approx(2 * 1 / (2 * 1 + 0 + 3))
    assert out.macro_f == pytest.approx(0.5)
