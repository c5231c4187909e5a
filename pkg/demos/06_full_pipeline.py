"""The whole pipeline on the bundled synthetic fixtures.

Generates the three fixture tasks, validates them, extracts log-mel and
MFCC baseline embeddings, evaluates each (task, baseline) pair through the
downstream grid, and assembles the cross-model report, exactly as the CLI
would be driven in batch.  Expect a few minutes of CPU time.
"""

import tempfile
import time
from pathlib import Path

from click.testing import CliRunner

from hearness.cli import main

root = Path(tempfile.mkdtemp())
runner = CliRunner()


def run(*args):
    start = time.perf_counter()
    result = runner.invoke(main, list(args))
    if result.exit_code != 0:
        raise SystemExit(result.output)
    print(f"$ hearness {' '.join(args)}   [{time.perf_counter() - start:.1f}s]")
    for line in result.output.strip().splitlines():
        print(f"    {line}")


run("make-fixtures", "--out", str(root / "tasks"), "--seed", "42")

for task in ("mini-pitch", "mini-tags", "mini-events"):
    run("validate", "--task-dir", str(root / "tasks" / task))

for baseline in ("logmel", "mfcc"):
    for task in ("mini-pitch", "mini-tags", "mini-events"):
        run("embed", "--task-dir", str(root / "tasks" / task),
            "--baseline", baseline, "--out", str(root / "emb" / baseline))

for baseline in ("logmel", "mfcc"):
    for task in ("mini-pitch", "mini-tags", "mini-events"):
        run("eval", "--task-dir", str(root / "tasks" / task),
            "--embeddings-dir", str(root / "emb" / baseline),
            "--model", baseline, "--seed", "42", "--out", str(root / "scores"))

run("report", "--scores", str(root / "scores" / "score.*.json"),
    "--out", str(root / "report"))

print(f"\nartifacts under {root}")
