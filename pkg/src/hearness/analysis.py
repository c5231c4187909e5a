"""Cross-model score analysis.

Assembles a models x tasks score matrix, normalizes each task column to
zero mean and unit (population) variance with hard clamping to [-1, +1],
imputes missing cells by iterative round-robin OLS regression, computes
Pearson correlation tables for tasks and models, orders them by an
open-path TSP heuristic on 1 - correlation distances, and renders CSV and
SVG reports.  Missing cells stay NaN through normalization and are drawn
distinctly in the heatmaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ColumnEntirelyMissing


@dataclass(frozen=True)
class ScoreMatrix:
    """models x tasks scores; NaN marks a model that did not complete a task."""

    models: tuple[str, ...]
    tasks: tuple[str, ...]
    raw: np.ndarray  # (M, T) float64 with NaN for missing
    normalized: np.ndarray | None = None
    metrics: tuple[str, ...] | None = None  # per-task metric kind, for reports

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=np.float64)
        if raw.shape != (len(self.models), len(self.tasks)):
            raise ValueError("raw must be (len(models), len(tasks))")
        object.__setattr__(self, "raw", raw)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.raw)


def normalize(matrix: ScoreMatrix) -> ScoreMatrix:
    """Standardize each task column, then clamp to [-1, +1].

    Per column, over non-missing entries: subtract the mean and divide by
    the population standard deviation, then clamp.  Zero-variance columns
    normalize to all zeros; missing cells stay missing.
    """
    raw = matrix.raw
    out = np.full_like(raw, np.nan)
    for j in range(raw.shape[1]):
        col = raw[:, j]
        present = ~np.isnan(col)
        if not present.any():
            continue
        values = col[present]
        std = values.std()  # population
        # zero variance up to fp dust in the mean subtraction
        if std <= 1e-12 * max(1.0, float(np.abs(values).max())):
            out[present, j] = 0.0
        else:
            out[present, j] = np.clip((values - values.mean()) / std, -1.0, 1.0)
    return replace(matrix, normalized=out)


def impute(values: np.ndarray, max_rounds: int = 10, tol: float = 1e-3) -> np.ndarray:
    """Fill NaN cells by iterative round-robin OLS regression.

    Missing cells start at their column mean; then each column with missing
    values is repeatedly regressed (with intercept) on all other columns,
    fitting on the rows where that column was observed and overwriting its
    missing cells with predictions, until the largest cell change drops
    below ``tol`` or ``max_rounds`` passes complete.
    """
    values = np.asarray(values, dtype=np.float64)
    missing = np.isnan(values)
    if not missing.any():
        return values.copy()
    work = values.copy()
    for j in range(values.shape[1]):
        col_missing = missing[:, j]
        if col_missing.all():
            raise ColumnEntirelyMissing(f"column {j} has no observed entries")
        work[col_missing, j] = work[~col_missing, j].mean()

    n_cols = values.shape[1]
    for _ in range(max_rounds):
        max_change = 0.0
        for j in range(n_cols):
            col_missing = missing[:, j]
            if not col_missing.any():
                continue
            others = [c for c in range(n_cols) if c != j]
            design = np.column_stack(
                [np.ones(values.shape[0])] + [work[:, c] for c in others]
            )
            observed = ~col_missing
            coef, *_ = np.linalg.lstsq(design[observed], work[observed, j], rcond=None)
            predicted = design[col_missing] @ coef
            max_change = max(max_change, float(np.abs(predicted - work[col_missing, j]).max()))
            work[col_missing, j] = predicted
        if max_change < tol:
            break
    return work


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da)) * math.sqrt(float(db @ db))
    if denom == 0.0:
        return 0.0  # zero-variance vector: uncorrelated by convention
    return float(da @ db / denom)


def correlation(values: np.ndarray, axis: str) -> np.ndarray:
    """Pearson correlation between tasks (columns) or models (rows).

    Expects a complete (imputed) matrix; the result is symmetric with a
    unit diagonal.
    """
    values = np.asarray(values, dtype=np.float64)
    if axis == "tasks":
        vectors = values.T
    elif axis == "models":
        vectors = values
    else:
        raise ValueError("axis must be 'tasks' or 'models'")
    n = vectors.shape[0]
    corr = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            corr[i, j] = corr[j, i] = _pearson(vectors[i], vectors[j])
    return corr


# --- seriation --------------------------------------------------------------


def corr_to_distance(corr: np.ndarray) -> np.ndarray:
    """Map correlations [-1, +1] to distances [+2, 0]."""
    return 1.0 - np.asarray(corr, dtype=np.float64)


def _path_length(dist: np.ndarray, order: np.ndarray) -> float:
    return float(dist[order[:-1], order[1:]].sum())


def _nearest_neighbor(dist: np.ndarray, start: int) -> np.ndarray:
    n = dist.shape[0]
    visited = np.zeros(n, dtype=bool)
    order = [start]
    visited[start] = True
    for _ in range(n - 1):
        row = dist[order[-1]].copy()
        row[visited] = np.inf
        nxt = int(np.argmin(row))
        order.append(nxt)
        visited[nxt] = True
    return np.asarray(order)


def _two_opt_pass(dist: np.ndarray, order: np.ndarray) -> bool:
    """One sweep of 2-opt segment reversals; returns whether anything improved."""
    n = order.size
    improved = False
    for i in range(n - 1):
        for j in range(i + 1, n):
            # reversing order[i..j] changes only the boundary edges
            before = 0.0
            after = 0.0
            if i > 0:
                before += dist[order[i - 1], order[i]]
                after += dist[order[i - 1], order[j]]
            if j < n - 1:
                before += dist[order[j], order[j + 1]]
                after += dist[order[i], order[j + 1]]
            if after < before - 1e-12:
                order[i : j + 1] = order[i : j + 1][::-1]
                improved = True
    return improved


def _or_opt_pass(dist: np.ndarray, order: np.ndarray) -> bool:
    """One sweep of segment relocations (lengths 1-3); returns improvement."""
    n = order.size
    total = _path_length(dist, order)
    for seg_len in (1, 2, 3):
        if seg_len >= n:
            continue
        for i in range(n - seg_len + 1):
            segment = order[i : i + seg_len]
            rest = np.concatenate([order[:i], order[i + seg_len :]])
            for k in range(rest.size + 1):
                if k == i:
                    continue
                candidate = np.concatenate([rest[:k], segment, rest[k:]])
                if _path_length(dist, candidate) < total - 1e-12:
                    order[...] = candidate
                    return True
    return False


def _local_search(dist: np.ndarray, order: np.ndarray) -> np.ndarray:
    order = order.copy()
    while _two_opt_pass(dist, order) or _or_opt_pass(dist, order):
        pass
    return order


_EXACT_LIMIT = 12


def _exact_open_path(dist: np.ndarray) -> np.ndarray:
    """Held-Karp over (visited-set, endpoint) states; optimal for small n."""
    n = dist.shape[0]
    full = 1 << n
    dp = np.full((full, n), np.inf)
    parent = np.full((full, n), -1, dtype=np.int64)
    for i in range(n):
        dp[1 << i, i] = 0.0
    for subset in range(full):
        for j in range(n):
            cost = dp[subset, j]
            if not np.isfinite(cost):
                continue
            for k in range(n):
                if subset & (1 << k):
                    continue
                nxt = subset | (1 << k)
                cand = cost + dist[j, k]
                if cand < dp[nxt, k]:
                    dp[nxt, k] = cand
                    parent[nxt, k] = j
    end = int(np.argmin(dp[full - 1]))
    order = [end]
    subset = full - 1
    while parent[subset, order[-1]] != -1:
        prev = int(parent[subset, order[-1]])
        subset ^= 1 << order[-1]
        order.append(prev)
    return np.asarray(order[::-1])


def tsp_order(corr: np.ndarray) -> np.ndarray:
    """Visiting order minimizing the open-path TSP length under the
    1 - correlation distance.

    Small tables (n <= 12, which covers the brute-force-checkable range) are
    solved exactly by Held-Karp dynamic programming; larger tables use
    nearest-neighbor from every start refined by 2-opt reversals plus short
    segment relocations, keeping the best path.  The result is always a
    permutation of range(n).
    """
    dist = corr_to_distance(corr)
    n = dist.shape[0]
    if n <= 2:
        return np.arange(n)
    if n <= _EXACT_LIMIT:
        return _exact_open_path(dist)
    best_order = None
    best_len = np.inf
    for start in range(n):
        order = _local_search(dist, _nearest_neighbor(dist, start))
        length = _path_length(dist, order)
        if length < best_len - 1e-12:
            best_len = length
            best_order = order
    return best_order


# --- reports ----------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, rows: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(",".join(row) + "\n")


def _heat_color(value: float) -> str:
    """Diverging blue-white-red map over [-1, 1]."""
    v = max(-1.0, min(1.0, value))
    if v >= 0:
        r, g, b = 255, round(255 * (1 - v)), round(255 * (1 - v))
    else:
        r, g, b = round(255 * (1 + v)), round(255 * (1 + v)), 255
    return f"rgb({r},{g},{b})"


def _svg_heatmap(
    path: Path,
    values: np.ndarray,
    missing: np.ndarray,
    row_labels: list[str],
    col_labels: list[str],
    title: str,
    cell: int = 22,
) -> None:
    n_rows, n_cols = values.shape
    margin_left = 10 + 7 * max((len(s) for s in row_labels), default=1)
    margin_top = 10 + 7 * max((len(s) for s in col_labels), default=1)
    width = margin_left + n_cols * cell + 10
    height = margin_top + n_rows * cell + 30
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<title>{title}</title>',
        '<style>text{font-family:sans-serif;font-size:10px}</style>',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i in range(n_rows):
        for j in range(n_cols):
            x = margin_left + j * cell
            y = margin_top + i * cell
            if missing[i, j]:
                parts.append(
                    f'<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" '
                    f'fill="#d9d9d9" stroke="#999"/>'
                )
                parts.append(
                    f'<line x1="{x}" y1="{y}" x2="{x + cell}" y2="{y + cell}" stroke="#999"/>'
                )
            else:
                color = _heat_color(values[i, j])
                parts.append(
                    f'<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" '
                    f'fill="{color}" stroke="#ccc"/>'
                )
    for i, label in enumerate(row_labels):
        y = margin_top + i * cell + cell // 2 + 3
        parts.append(f'<text x="{margin_left - 6}" y="{y}" text-anchor="end">{label}</text>')
    for j, label in enumerate(col_labels):
        x = margin_left + j * cell + cell // 2
        parts.append(
            f'<text x="{x}" y="{margin_top - 6}" text-anchor="start" '
            f'transform="rotate(-60 {x} {margin_top - 6})">{label}</text>'
        )
    parts.append(
        f'<text x="{margin_left}" y="{height - 10}">{title}</text>'
    )
    parts.append("</svg>")
    path.write_text("\n".join(parts), encoding="utf-8")


def emit_reports(
    matrix: ScoreMatrix,
    correlations: dict[str, np.ndarray],
    orders: dict[str, np.ndarray],
    out_dir,
    imputed: np.ndarray | None = None,
) -> list[Path]:
    """Write scores.csv, normalized.csv, correlation CSVs, and SVG heatmaps.

    ``correlations`` and ``orders`` are keyed "tasks" / "models".  Heatmap
    rows and columns follow the given orders; CSVs keep input order.  Float
    cells are written with 17 significant digits so they re-read bit-exactly.
    When the ``imputed`` completion of the normalized matrix is given it is
    exported too (imputed.csv), so external tools can project it.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if matrix.normalized is None:
        matrix = normalize(matrix)
    written = []

    rows = [["model", "task", "metric", "score", "missing"]]
    for i, model in enumerate(matrix.models):
        for j, task in enumerate(matrix.tasks):
            missing = bool(matrix.missing[i, j])
            metric = matrix.metrics[j] if matrix.metrics else ""
            rows.append(
                [model, task, metric, "" if missing else _fmt(matrix.raw[i, j]),
                 "true" if missing else "false"]
            )
    _write_csv(out / "scores.csv", rows)
    written.append(out / "scores.csv")

    rows = [["model", "task", "score", "missing"]]
    for i, model in enumerate(matrix.models):
        for j, task in enumerate(matrix.tasks):
            missing = bool(matrix.missing[i, j])
            rows.append(
                [model, task, "" if missing else _fmt(matrix.normalized[i, j]),
                 "true" if missing else "false"]
            )
    _write_csv(out / "normalized.csv", rows)
    written.append(out / "normalized.csv")

    if imputed is not None:
        rows = [[""] + list(matrix.tasks)]
        for i, model in enumerate(matrix.models):
            rows.append([model] + [_fmt(v) for v in imputed[i]])
        _write_csv(out / "imputed.csv", rows)
        written.append(out / "imputed.csv")

    for axis, names in (("tasks", matrix.tasks), ("models", matrix.models)):
        corr = correlations[axis]
        rows = [[""] + list(names)]
        for i, name in enumerate(names):
            rows.append([name] + [_fmt(v) for v in corr[i]])
        _write_csv(out / f"corr_{axis}.csv", rows)
        written.append(out / f"corr_{axis}.csv")

    task_order = np.asarray(orders["tasks"])
    model_order = np.asarray(orders["models"])
    _svg_heatmap(
        out / "heatmap_scores.svg",
        matrix.normalized[np.ix_(model_order, task_order)],
        matrix.missing[np.ix_(model_order, task_order)],
        [matrix.models[i] for i in model_order],
        [matrix.tasks[j] for j in task_order],
        "normalized scores (seriated)",
    )
    written.append(out / "heatmap_scores.svg")
    for axis, names in (("tasks", matrix.tasks), ("models", matrix.models)):
        order = np.asarray(orders[axis])
        corr = correlations[axis][np.ix_(order, order)]
        _svg_heatmap(
            out / f"heatmap_corr_{axis}.svg",
            corr,
            np.zeros_like(corr, dtype=bool),
            [names[i] for i in order],
            [names[i] for i in order],
            f"{axis} correlation (seriated)",
        )
        written.append(out / f"heatmap_corr_{axis}.svg")
    return written
