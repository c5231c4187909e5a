"""Acceptance suite: one test per criterion, each printing a PASS line with
its measured numbers.  Run with ``pytest tests/test_acceptance.py -v -s``.

The end-to-end criteria generate the bundled synthetic fixture tasks once
per session and drive the real CLI.
"""

import itertools
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from hearness import dsp
from hearness.analysis import corr_to_distance, tsp_order
from hearness.cli import main as cli_main
from hearness.embio import TimestampEmbedding, read_embedding
from hearness.fixtures import read_wav
from hearness.metrics import (
    FrameActivations,
    auc_roc,
    event_fmeasure_corpus,
    frames_to_events,
    match_events_per_class,
    mean_average_precision,
)
from hearness.mlp import Mlp
from hearness.task import load_task
from test_metrics import auc_oracle, map_oracle, max_matching_oracle

DATA = Path(__file__).parent / "data"


def _announce(name, elapsed, detail=""):
    print(f"\nACCEPTANCE PASS: {name} ({elapsed:.1f}s){' - ' + detail if detail else ''}")


# --- session-scoped pipeline artifacts --------------------------------------


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    """Fixture tasks, log-mel embeddings, and three eval runs, built once."""
    root = tmp_path_factory.mktemp("pipeline")
    runner = CliRunner()

    def run(args):
        result = runner.invoke(cli_main, args)
        assert result.exit_code == 0, result.output
        return result

    run(["make-fixtures", "--out", str(root / "tasks"), "--seed", "42"])
    timings = {}
    for name in ("mini-pitch", "mini-events"):
        run(["embed", "--task-dir", str(root / "tasks" / name),
             "--baseline", "logmel", "--out", str(root / "emb")])

    def evaluate(task, seed, out):
        start = time.perf_counter()
        run(["eval", "--task-dir", str(root / "tasks" / task),
             "--embeddings-dir", str(root / "emb"), "--model", "logmel",
             "--seed", str(seed), "--out", str(root / out)])
        timings[(task, out)] = time.perf_counter() - start

    evaluate("mini-pitch", 42, "run1")
    evaluate("mini-pitch", 42, "run2")
    evaluate("mini-pitch", 43, "run3")
    evaluate("mini-events", 42, "run1")
    return {"root": root, "timings": timings}


def _score_file(pipeline, run, task):
    return pipeline["root"] / run / f"score.{task}.logmel.json"


# --- criterion 1: metric oracle suite ----------------------------------------


def test_criterion_metric_oracles():
    start = time.perf_counter()
    rng = np.random.default_rng(1001)

    for _ in range(200):  # event matching vs exhaustive assignment, exact
        def random_events(count):
            from hearness.task import Event

            return [
                Event(onset=float(rng.uniform(0, 4)), offset=float(rng.uniform(4.1, 5)),
                      label=int(rng.integers(0, 3)))
                for _ in range(count)
            ]

        ref = random_events(int(rng.integers(0, 7)))
        est = random_events(int(rng.integers(0, 7)))
        counts = match_events_per_class(ref, est, onset_tol_ms=200)
        for label in {e.label for e in ref} | {e.label for e in est}:
            ref_c = [e for e in ref if e.label == label]
            est_c = [e for e in est if e.label == label]
            adj = [
                [j for j, e in enumerate(est_c) if abs(e.onset - r.onset) <= 0.2]
                for r in ref_c
            ]
            assert counts[label].tp == max_matching_oracle(adj, len(est_c))

    for _ in range(200):  # mAP vs the definitional oracle
        n, c = int(rng.integers(2, 10)), int(rng.integers(1, 4))
        scores = rng.random((n, c))
        truth = rng.random((n, c)) < 0.4
        if not truth.any():
            truth[0, 0] = True
        assert abs(
            mean_average_precision(scores, truth) - map_oracle(scores, truth)
        ) < 1e-10

    for _ in range(200):  # AUCROC vs pairwise enumeration
        n = int(rng.integers(3, 14))
        scores = np.round(rng.random(n), 1)
        truth = rng.random(n) < 0.5
        if truth.all() or not truth.any():
            truth[0] = not truth[0]
        assert abs(auc_roc(scores, truth) - auc_oracle(scores, truth)) < 1e-10

    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    _announce("metric oracle suite", elapsed, "3 x 200 instances exact")


# --- criterion 2: gradient check ----------------------------------------------


def test_criterion_gradient_check():
    start = time.perf_counter()
    rng = np.random.default_rng(2002)
    worst = 0.0
    for trial in range(50):
        in_dim = int(rng.integers(2, 17))
        out_dim = int(rng.integers(2, 9))
        hidden = [int(rng.integers(2, 17)) for _ in range(int(rng.integers(1, 3)))]
        head = "multiclass" if trial % 2 == 0 else "multilabel"
        mlp = Mlp(in_dim, out_dim, hidden, head, dropout=0.0,
                  seed=int(rng.integers(0, 2**31)), dtype=np.float64)
        for i, width in enumerate(hidden):  # nontrivial inference-mode BN
            mlp.running_mean[i][...] = rng.normal(0, 0.5, width)
            mlp.running_var[i][...] = rng.uniform(0.5, 2.0, width)
        batch = int(rng.integers(2, 9))
        x = rng.normal(size=(batch, in_dim))
        if head == "multiclass":
            targets = rng.integers(0, out_dim, batch)
        else:
            targets = (rng.random((batch, out_dim)) < 0.5).astype(np.float64)
        _, grads = mlp.loss_and_grad(x, targets, training=False)
        eps = 1e-5
        for name, param in mlp.params.items():
            flat = param.reshape(-1)
            for idx in rng.choice(flat.size, size=min(3, flat.size), replace=False):
                orig = flat[idx]
                flat[idx] = orig + eps
                lp, _ = mlp.loss_and_grad(x, targets, training=False)
                flat[idx] = orig - eps
                lm, _ = mlp.loss_and_grad(x, targets, training=False)
                flat[idx] = orig
                fd = (lp - lm) / (2 * eps)
                g = grads[name].reshape(-1)[idx]
                rel = abs(fd - g) / max(1e-8, abs(fd), abs(g))
                worst = max(worst, rel)
    elapsed = time.perf_counter() - start
    assert worst < 1e-4
    assert elapsed < 60.0
    _announce("gradient check", elapsed, f"50 configs, worst rel err {worst:.2e}")


# --- criterion 3: grid contract -------------------------------------------------


def test_criterion_grid_contract():
    start = time.perf_counter()
    from hearness.mlp import grid_lattice, make_grid

    assert len(grid_lattice()) == 16
    grid = make_grid(42)
    assert len(grid) == 8
    assert len({(g.hidden_layers, g.learning_rate, g.init) for g in grid}) == 8

    # identical seed -> identical sequence across two separate processes
    snippet = (
        "from hearness.mlp import make_grid;"
        "print([(g.hidden_layers, g.learning_rate, g.init) for g in make_grid(42)])"
    )
    outputs = [
        subprocess.run(
            [sys.executable, "-c", snippet], capture_output=True, text=True, check=True
        ).stdout
        for _ in range(2)
    ]
    assert outputs[0] == outputs[1]
    in_process = str([(g.hidden_layers, g.learning_rate, g.init) for g in grid]) + "\n"
    assert outputs[0] == in_process
    elapsed = time.perf_counter() - start
    _announce("grid contract", elapsed, "16-lattice, 8 distinct, process-stable")


# --- criterion 4: end-to-end determinism -----------------------------------------


def test_criterion_end_to_end_determinism(pipeline):
    run1 = _score_file(pipeline, "run1", "mini-pitch").read_bytes()
    run2 = _score_file(pipeline, "run2", "mini-pitch").read_bytes()
    assert run1 == run2, "same seed must give byte-identical score files"
    record1 = (pipeline["root"] / "run1" / "trainrecord.mini-pitch.logmel.json").read_bytes()
    record2 = (pipeline["root"] / "run2" / "trainrecord.mini-pitch.logmel.json").read_bytes()
    assert record1 == record2

    s42 = json.loads(run1)["primary_score"]
    s43 = json.loads(_score_file(pipeline, "run3", "mini-pitch").read_text())[
        "primary_score"
    ]
    assert abs(s42 - s43) < 0.05, f"seed sensitivity too high: {s42} vs {s43}"
    elapsed = sum(
        pipeline["timings"][("mini-pitch", run)] for run in ("run1", "run2", "run3")
    )
    assert pipeline["timings"][("mini-pitch", "run2")] < 300.0
    _announce(
        "end-to-end determinism", elapsed,
        f"byte-identical; |{s42:.3f} - {s43:.3f}| = {abs(s42 - s43):.3f}",
    )


# --- criterion 5: desk-scale learning ----------------------------------------------


def test_criterion_desk_scale_learning(pipeline):
    score = json.loads(_score_file(pipeline, "run1", "mini-pitch").read_text())
    assert score["primary_score"] >= 0.90

    # independent oracle: nearest mel bin of the strongest frame-mean energy
    root = pipeline["root"] / "tasks" / "mini-pitch"
    loaded = load_task(root)
    cfg = dsp.DspConfig(sample_rate=16000)
    centers = dsp.mel_filter_centers(cfg)
    from hearness.fixtures import PITCH_FREQS

    class_bins = np.array([int(np.argmin(np.abs(centers - f))) for f in PITCH_FREQS])
    correct = 0
    test_clips = loaded.clips_in("test")
    for clip in test_clips:
        _, samples = read_wav(root / "16000" / "test" / clip.relpath)
        energies = dsp.mel_power(samples, cfg).mean(axis=0)
        predicted = int(np.argmin(np.abs(class_bins - int(np.argmax(energies)))))
        correct += predicted == clip.scene_labels[0]
    oracle_acc = correct / len(test_clips)
    assert oracle_acc >= 0.99
    elapsed = pipeline["timings"][("mini-pitch", "run1")]
    assert elapsed < 300.0
    _announce(
        "desk-scale learning", elapsed,
        f"pipeline acc {score['primary_score']:.3f}, oracle acc {oracle_acc:.3f}",
    )


# --- criterion 6: timestamp pipeline -------------------------------------------------


def test_criterion_timestamp_pipeline(pipeline):
    score = json.loads(_score_file(pipeline, "run1", "mini-events").read_text())
    assert score["metric_kind"] == "onset_fms"
    assert score["primary_score"] >= 0.9

    # ground-truth activations fed straight through postprocessing score exactly 1.0
    root = pipeline["root"] / "tasks" / "mini-events"
    loaded = load_task(root)
    hop = 0.05
    ref, est = {}, {}
    for clip in loaded.clips_in("test"):
        emb = read_embedding(
            pipeline["root"] / "emb" / "mini-events" / "test" / f"{clip.relpath}.hemb"
        )
        assert isinstance(emb, TimestampEmbedding)
        probs = np.zeros((emb.n_frames, loaded.definition.n_labels))
        for ev in clip.events:
            mask = (emb.timestamps >= ev.onset) & (emb.timestamps < ev.offset)
            probs[mask, ev.label] = 1.0
        fa = FrameActivations(emb.timestamps, probs)
        est[clip.relpath] = frames_to_events(
            fa, threshold=0.5, window_ms=250.0, min_duration_ms=125.0, hop_ms=hop * 1000
        )
        ref[clip.relpath] = list(clip.events)
    scores = event_fmeasure_corpus(ref, est, onset_tol_ms=200.0)
    assert scores.f == 1.0
    elapsed = pipeline["timings"][("mini-events", "run1")]
    assert elapsed < 300.0
    _announce(
        "timestamp pipeline", elapsed,
        f"learned F {score['primary_score']:.3f}, ground-truth F {scores.f:.1f}",
    )


# --- criterion 7: normalization and seriation -------------------------------------------


def test_criterion_normalization_and_seriation():
    start = time.perf_counter()
    from hearness.analysis import ScoreMatrix, normalize

    out = normalize(
        ScoreMatrix(models=("a", "b", "c"), tasks=("t",),
                    raw=np.array([[0.2], [0.5], [0.8]]))
    )
    assert out.normalized[:, 0].tolist() == [-1.0, 0.0, 1.0]

    corr = np.array([[1.0, -1.0], [-1.0, 1.0]])
    dist = corr_to_distance(corr)
    assert dist[0, 1] == 2.0 and dist[0, 0] == 0.0

    rng = np.random.default_rng(7007)
    gaps = 0
    for _ in range(100):
        n = int(rng.integers(3, 9))
        corr = np.clip(rng.uniform(-1, 1, (n, n)), -1, 1)
        corr = (corr + corr.T) / 2
        np.fill_diagonal(corr, 1.0)
        dist = corr_to_distance(corr)
        order = tsp_order(corr)
        ours = float(dist[order[:-1], order[1:]].sum())
        best = min(
            sum(dist[p[i], p[i + 1]] for i in range(n - 1))
            for p in itertools.permutations(range(n))
        )
        if ours > best + 1e-9:
            gaps += 1
    assert gaps == 0, f"{gaps}/100 orders missed the optimum"
    elapsed = time.perf_counter() - start
    _announce(
        "normalization worked example + seriation", elapsed, "0/100 optimality gaps"
    )


# --- criterion 8: format golden test --------------------------------------------------


def test_criterion_format_golden():
    start = time.perf_counter()
    emb = read_embedding(DATA / "golden_timestamp.hemb")
    assert emb.timestamps.tolist() == [0.0, 0.25, 0.5]
    assert emb.matrix.tolist() == [[1.5, -2.25], [0.125, 3.0], [-0.5, 0.0078125]]
    scene = read_embedding(DATA / "golden_scene.hemb")
    assert scene.vector.tolist() == [2.0, -0.75, 0.0625, 123456.0]
    elapsed = time.perf_counter() - start
    _announce("format golden test", elapsed, "golden .hemb decodes exactly")
