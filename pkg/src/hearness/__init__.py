"""Audio-embedding benchmark harness.

Evaluates frozen audio embeddings end to end: tasks in a common on-disk
format, a bit-exact embedding interchange file, built-in DSP baselines, a
shallow MLP probe trained over a deterministic hyperparameter grid,
task-appropriate metrics (including tolerance-matched sound-event
F-measures), and cross-model score normalization / correlation analysis.
"""

from . import analysis, dsp, fixtures, metrics, mlp, train
from .embio import (
    SceneEmbedding,
    TimestampEmbedding,
    read_embedding,
    write_embedding,
)
from .task import (
    ClipRecord,
    Event,
    LoadedTask,
    MetricSpec,
    Partitions,
    TaskDefinition,
    load_task,
    resolve_partitions,
    write_task,
)

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "dsp",
    "fixtures",
    "metrics",
    "mlp",
    "train",
    "SceneEmbedding",
    "TimestampEmbedding",
    "read_embedding",
    "write_embedding",
    "ClipRecord",
    "Event",
    "LoadedTask",
    "MetricSpec",
    "Partitions",
    "TaskDefinition",
    "load_task",
    "resolve_partitions",
    "write_task",
]
