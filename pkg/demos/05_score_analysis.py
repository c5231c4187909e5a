"""Cross-model score analysis: normalize, impute, correlate, seriate.

Fabricates a models x tasks score matrix with two latent model families and
a few missing cells, then runs the full analysis pipeline and writes the
CSV/SVG reports to a temp directory.
"""

import tempfile
from pathlib import Path

import numpy as np

from hearness.analysis import (
    ScoreMatrix,
    correlation,
    emit_reports,
    impute,
    normalize,
    tsp_order,
)

rng = np.random.default_rng(3)
models = tuple(f"model-{c}" for c in "abcdefgh")
tasks = ("pitch", "tags", "events", "speech", "genre")

# two families: models a-d do well on pitch-ish tasks, e-h on semantic ones
skill = np.array([[0.9, 0.3, 0.8, 0.2, 0.3]] * 4 + [[0.3, 0.9, 0.4, 0.8, 0.9]] * 4)
raw = np.clip(skill + rng.normal(0, 0.08, skill.shape), 0, 1)
raw[1, 4] = np.nan  # model-b never finished "genre"
raw[6, 0] = np.nan

matrix = normalize(ScoreMatrix(models=models, tasks=tasks, raw=raw))
print("normalized (clamped to [-1, +1]); 'x' marks a missing cell:")
for i, model in enumerate(models):
    cells = [
        "  x  " if np.isnan(v) else f"{v:+.2f}" for v in matrix.normalized[i]
    ]
    print(f"  {model}: {'  '.join(cells)}")

complete = impute(matrix.normalized)
print(f"\nimputed the {int(np.isnan(raw).sum())} missing cells by round-robin "
      f"OLS regression:")
print(f"  model-b x genre -> {complete[1, 4]:+.2f}")
print(f"  model-g x pitch -> {complete[6, 0]:+.2f}")

corr_tasks = correlation(complete, "tasks")
order = tsp_order(corr_tasks)
print("\ntask correlation (Pearson over imputed normalized scores):")
for i, task in enumerate(tasks):
    print(f"  {task:>7}: {np.round(corr_tasks[i], 2)}")
print(f"\nseriated task order (1 - correlation distances): "
      f"{[tasks[i] for i in order]}")

out = Path(tempfile.mkdtemp()) / "reports"
written = emit_reports(
    matrix,
    {"tasks": corr_tasks, "models": correlation(complete, "models")},
    {"tasks": order, "models": tsp_order(correlation(complete, "models"))},
    out,
)
print("\nwrote:")
for path in written:
    print(f"  {path}")
