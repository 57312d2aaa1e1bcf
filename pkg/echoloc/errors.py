"""
Error hierarchy for the echoloc pipeline.

Every error carries a machine-readable ``code`` (one of :class:`ErrorCode`)
and an ``exit_code`` used by the CLI: 2 for problems with user input (bad
files, bad parameters), 1 for internal failures.
"""

from __future__ import annotations


class ErrorCode:
    CONFIG_ERROR = "config_error"
    PARSE_ERROR = "parse_error"
    VALIDATION_ERROR = "validation_error"
    REGION_AMBIGUITY = "region_ambiguity"
    FLOOR_PLAN_ERROR = "floor_plan_error"
    SOURCE_OUTSIDE = "source_outside"
    SOURCE_AT_RECEIVER = "source_at_receiver"
    UNDEFINED_DECAY = "undefined_decay"
    UNSUPPORTED_ENCODING = "unsupported_encoding"
    MALFORMED_HEADER = "malformed_header"
    CLIPPING = "clipping"
    SILENT_INPUT = "silent_input"
    BELOW_GATE = "below_gate"
    TOO_SHORT = "too_short"
    SAMPLE_RATE_MISMATCH = "sample_rate_mismatch"
    LOUDNESS_UNCONVERGED = "loudness_unconverged"
    DATASET_ERROR = "dataset_error"
    SHAPE_MISMATCH = "shape_mismatch"
    MODEL_FILE_ERROR = "model_file_error"
    DIVERGED = "diverged"
    METRICS_ERROR = "metrics_error"
    MISSING_FILE = "missing_file"


class EcholocError(Exception):
    """Structured error from any pipeline stage."""

    exit_code: int = 2

    def __init__(self, message: str, code: str = ""):
        super().__init__(message)
        self.code = code


class ConfigError(EcholocError):
    def __init__(self, message: str, code: str = ErrorCode.CONFIG_ERROR):
        super().__init__(message, code)


class SceneParseError(EcholocError):
    def __init__(self, message: str, code: str = ErrorCode.PARSE_ERROR):
        super().__init__(message, code)


class SceneValidationError(EcholocError):
    def __init__(self, message: str, code: str = ErrorCode.VALIDATION_ERROR):
        super().__init__(message, code)


class RegionAmbiguityError(EcholocError):
    def __init__(self, message: str, code: str = ErrorCode.REGION_AMBIGUITY):
        super().__init__(message, code)


class FloorPlanError(EcholocError):
    def __init__(self, message: str, code: str = ErrorCode.FLOOR_PLAN_ERROR):
        super().__init__(message, code)


class PropagationError(EcholocError):
    """Raised for invalid source placement or degenerate impulse responses."""


class AudioFormatError(EcholocError):
    """Malformed or unsupported WAV input."""


class AudioValueError(EcholocError):
    """Audio content that cannot be processed (silence, clipping, too short)."""


class DatasetError(EcholocError):
    """Dataset generation failure, optionally tied to one placement."""

    def __init__(self, message: str, code: str = ErrorCode.DATASET_ERROR, placement_index: int | None = None):
        if placement_index is not None:
            message = f"placement {placement_index}: {message}"
        super().__init__(message, code)
        self.placement_index = placement_index


class ModelError(EcholocError):
    def __init__(self, message: str, code: str = ErrorCode.SHAPE_MISMATCH):
        super().__init__(message, code)


class TrainingDivergedError(EcholocError):
    exit_code = 1

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message, ErrorCode.DIVERGED)
        self.diagnostics = diagnostics or {}


class MetricsError(EcholocError):
    def __init__(self, message: str, code: str = ErrorCode.METRICS_ERROR):
        super().__init__(message, code)
