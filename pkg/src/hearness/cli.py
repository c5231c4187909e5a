"""Batch orchestration front-end.

Subcommands: ``validate`` (check a task directory), ``embed`` (run a DSP
baseline over a task's clips and write .hemb files), ``eval`` (grid-train
and score one task from precomputed embeddings), ``report`` (assemble and
analyze a score matrix), and ``make-fixtures`` (generate the bundled
synthetic tasks).  Commands never mutate their inputs; outputs go only
under the requested output directory.  Exit codes: 0 success, 1 validation
failure, 2 evaluation failure, 3 I/O failure.
"""

from __future__ import annotations

import glob as globmod
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import analysis, dsp, fixtures
from . import task as task_mod
from . import train as train_mod
from .embio import read_embedding, write_embedding
from .errors import AllGridPointsFailed, EmbeddingFileError, HearnessError

EXIT_VALIDATION = 1
EXIT_EVALUATION = 2
EXIT_IO = 3

DEFAULT_SEED = 42


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("HEARNESS_SEED")
    return int(env) if env else DEFAULT_SEED


def _dump_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


@click.group()
def main():
    """Audio-embedding benchmark harness."""


@main.command("validate")
@click.option("--task-dir", required=True, type=click.Path(exists=True, file_okay=False))
def cmd_validate(task_dir):
    """Validate a task directory against the common format."""
    try:
        loaded = task_mod.load_task(task_dir)
    except HearnessError as exc:
        click.echo(f"INVALID: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    definition = loaded.definition
    click.echo(f"task: {definition.name}")
    click.echo(f"type: {definition.embedding_type}/{definition.predictor_type}")
    click.echo(f"metric: {definition.metric.kind}")
    click.echo(f"labels: {definition.n_labels}")
    for split in definition.splits:
        click.echo(f"  {split}: {len(loaded.clips_in(split))} clips")
    click.echo("OK")


def _embed_clip(definition, wav_path, baseline_fn, cfg):
    _, samples = fixtures.read_wav(wav_path)
    emb = baseline_fn(samples, cfg)
    if definition.embedding_type == task_mod.SCENE:
        return dsp.scene_pool(emb)
    return emb


@main.command("embed")
@click.option("--task-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--baseline", type=click.Choice(sorted(dsp.BASELINES)), default="logmel")
@click.option("--sr", type=int, default=None,
              help="Sample rate to read (default: first declared by the task).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--force", is_flag=True, help="Recompute embeddings that already exist.")
def cmd_embed(task_dir, baseline, sr, out_dir, force):
    """Run a built-in DSP baseline over a task's clips, writing .hemb files."""
    try:
        loaded = task_mod.load_task(task_dir)
    except HearnessError as exc:
        click.echo(f"INVALID: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    definition = loaded.definition
    rate = sr if sr is not None else definition.sample_rates[0]
    if rate not in definition.sample_rates:
        click.echo(f"sample rate {rate} not declared by task {definition.name}", err=True)
        sys.exit(EXIT_VALIDATION)
    cfg = dsp.DspConfig(sample_rate=rate)
    baseline_fn = dsp.BASELINES[baseline]
    written = 0
    try:
        for clip in loaded.clips:
            target = Path(out_dir) / definition.name / clip.split / f"{clip.relpath}.hemb"
            if target.exists() and not force:
                continue
            wav = Path(task_dir) / str(rate) / clip.split / clip.relpath
            write_embedding(target, _embed_clip(definition, wav, baseline_fn, cfg))
            written += 1
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    click.echo(f"wrote {written} embeddings ({len(loaded.clips) - written} already present)")


@main.command("eval")
@click.option("--task-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--embeddings-dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--model", default=None,
              help="Model name for output files (default: embeddings dir name).")
@click.option("--seed", type=int, default=None, show_default="42 or $HEARNESS_SEED")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--jobs", type=int, default=1, help="Grid points trained concurrently.")
@click.option("--force", is_flag=True, help="Re-evaluate even if a score file exists.")
def cmd_eval(task_dir, embeddings_dir, model, seed, out_dir, jobs, force):
    """Partition, grid-train, select, and test one task from .hemb embeddings."""
    seed = _resolve_seed(seed)
    try:
        loaded = task_mod.load_task(task_dir)
    except HearnessError as exc:
        click.echo(f"INVALID: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    definition = loaded.definition
    model = model or Path(embeddings_dir).name
    score_path = Path(out_dir) / f"score.{definition.name}.{model}.json"
    if score_path.exists() and not force:
        click.echo(f"{score_path} exists; skipping (use --force to redo)")
        return

    embeddings = {}
    try:
        for clip in loaded.clips:
            emb_path = (
                Path(embeddings_dir) / definition.name / clip.split
                / f"{clip.relpath}.hemb"
            )
            embeddings[clip.relpath] = read_embedding(emb_path)
    except (OSError, EmbeddingFileError) as exc:
        click.echo(f"cannot read embeddings: {exc}", err=True)
        sys.exit(EXIT_IO)

    try:
        result = train_mod.evaluate_task(loaded, embeddings, seed=seed, jobs=jobs)
    except AllGridPointsFailed as exc:
        click.echo(f"evaluation failed: {exc}", err=True)
        sys.exit(EXIT_EVALUATION)
    try:
        _dump_json(score_path, result.score_json(model))
        _dump_json(
            Path(out_dir) / f"trainrecord.{definition.name}.{model}.json",
            result.trainrecord_json(model, seed),
        )
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    click.echo(
        f"{definition.name} x {model}: {definition.metric.kind} = {result.primary:.4f}"
    )


@main.command("report")
@click.option("--scores", "scores_glob", required=True,
              help="Glob of score.*.json files to assemble.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def cmd_report(scores_glob, out_dir):
    """Assemble a score matrix and emit normalization/correlation reports."""
    paths = sorted(globmod.glob(scores_glob))
    if not paths:
        click.echo(f"no score files match {scores_glob!r}", err=True)
        sys.exit(EXIT_IO)
    docs = []
    for path in paths:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                docs.append(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"cannot read {path}: {exc}", err=True)
            sys.exit(EXIT_IO)

    models = sorted({doc["model"] for doc in docs})
    tasks = sorted({doc["task"] for doc in docs})
    metric_by_task = {doc["task"]: doc["metric_kind"] for doc in docs}
    raw = np.full((len(models), len(tasks)), np.nan)
    for doc in docs:
        raw[models.index(doc["model"]), tasks.index(doc["task"])] = doc["primary_score"]
    matrix = analysis.normalize(
        analysis.ScoreMatrix(
            models=tuple(models),
            tasks=tuple(tasks),
            raw=raw,
            metrics=tuple(metric_by_task[t] for t in tasks),
        )
    )
    complete = analysis.impute(matrix.normalized)
    correlations = {
        "tasks": analysis.correlation(complete, "tasks"),
        "models": analysis.correlation(complete, "models"),
    }
    orders = {axis: analysis.tsp_order(corr) for axis, corr in correlations.items()}
    try:
        written = analysis.emit_reports(
            matrix, correlations, orders, out_dir, imputed=complete
        )
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    for path in written:
        click.echo(str(path))


@main.command("make-fixtures")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None, show_default="42 or $HEARNESS_SEED")
@click.option("--only", multiple=True, type=click.Choice(sorted(fixtures.GENERATORS)))
def cmd_make_fixtures(out_dir, seed, only):
    """Generate the bundled synthetic fixture tasks."""
    seed = _resolve_seed(seed)
    try:
        tasks = fixtures.make_fixture_tasks(out_dir, seed=seed, names=only or None)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    for name, loaded in tasks.items():
        click.echo(f"{name}: {len(loaded.clips)} clips at {Path(out_dir) / name}")


if __name__ == "__main__":
    main()
