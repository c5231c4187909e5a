"""Exception types raised across the harness.

Everything derives from :class:`HearnessError` so callers can catch the whole
family with one clause; the CLI maps subfamilies to exit codes.
"""


class HearnessError(Exception):
    """Base class for all harness errors."""


# --- task format ---------------------------------------------------------


class TaskFormatError(HearnessError):
    """A task directory violates the common task format."""


class MissingMetadata(TaskFormatError):
    """task.json (or a required key in it) is absent or unparseable."""


class LabelOutsideVocabulary(TaskFormatError):
    """A label file references a label not in the task vocabulary."""


class MissingAudioFile(TaskFormatError):
    """A referenced clip has no audio file at a declared sample rate."""


class MalformedEvent(TaskFormatError):
    """An event has offset <= onset, a negative onset, or non-finite times."""


class ClipDurationMismatch(TaskFormatError):
    """A clip's audio length disagrees with the declared fixed duration."""


class FoldOutOfRange(HearnessError):
    """A fold index outside [0, k), or a fold given for a non-k-fold task."""


# --- embedding files -----------------------------------------------------


class EmbeddingFileError(HearnessError):
    """Base class for embedding interchange-file errors."""


class BadMagic(EmbeddingFileError):
    """The file does not start with the expected magic bytes."""


class UnsupportedVersion(EmbeddingFileError):
    """The file declares a format version this build cannot read."""


class TruncatedFile(EmbeddingFileError):
    """The file ends before the payload its header declares."""


class NonMonotonicTimestamps(EmbeddingFileError):
    """Timestamps are not strictly increasing."""


# --- DSP baselines -------------------------------------------------------


class AudioTooShort(HearnessError):
    """The input signal is shorter than one analysis window."""


class EmptyEmbedding(HearnessError):
    """An operation that needs at least one frame got none."""


# --- downstream training -------------------------------------------------


class NonFiniteLoss(HearnessError):
    """Training produced a non-finite loss or activation (divergence)."""


class AllGridPointsFailed(HearnessError):
    """Every hyperparameter grid point diverged; nothing to select."""


# --- metrics -------------------------------------------------------------


class NoPositivesAnywhere(HearnessError):
    """mAP is undefined: no class has a single positive example."""


class SingleClassOnly(HearnessError):
    """AUCROC is undefined: the truth vector has only one class."""


# --- analysis ------------------------------------------------------------


class ColumnEntirelyMissing(HearnessError):
    """A score-matrix column has no observed entries to impute from."""
