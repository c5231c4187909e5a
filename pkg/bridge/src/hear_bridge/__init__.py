"""Bridge from challenge-API audio models to the .hemb interchange format."""

from .export import (
    ApiMissingEntryPoint,
    BridgeConfig,
    BridgeError,
    NonMonotonicTimestamps,
    ShapeMismatch,
    export_task,
)

__version__ = "0.1.0"

__all__ = [
    "ApiMissingEntryPoint",
    "BridgeConfig",
    "BridgeError",
    "NonMonotonicTimestamps",
    "ShapeMismatch",
    "export_task",
]
