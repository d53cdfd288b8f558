"""Exception hierarchy shared across the toolkit.

Domain failures (a translation that does not pass its tests, an empty
retrieval result) are ordinary return values, never exceptions. Exceptions
are reserved for contract violations and environment problems.
"""

from __future__ import annotations


class ApitransError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(ApitransError):
    """Malformed serialized data (sequence text, index/pool line, config)."""


class ConfigurationError(ApitransError):
    """Missing or inconsistent runtime configuration (language, toolchain, paths)."""


class ExtractionError(ApitransError):
    """Source text could not be parsed far enough to extract calls.

    Carries the location of the first syntax problem when known.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        loc = f" at line {line}" if line is not None else ""
        if line is not None and col is not None:
            loc = f" at line {line}, col {col}"
        super().__init__(message + loc)
        self.line = line
        self.col = col


class EmptyCorpusError(ApitransError):
    """A corpus build produced zero non-empty API sequences."""


class CorpusBuildError(ApitransError):
    """A corpus build aborted midway; ``completed`` records were persisted."""

    def __init__(self, message: str, completed: int, partial_path: str | None = None):
        super().__init__(f"{message} ({completed} records completed)")
        self.completed = completed
        self.partial_path = partial_path


class ZeroTextError(ApitransError):
    """Attempt to embed text that is empty after trimming."""


class TransportError(ApitransError):
    """A remote provider call failed after the configured retries."""


class FixtureError(ApitransError):
    """A scripted provider ran out of canned responses."""


class EmptyTranslationError(ApitransError):
    """An LLM response contained no code after sentinel stripping."""


class GenerationError(ApitransError):
    """Test harness generation failed (unsupported type, missing function)."""


class ToolchainError(ApitransError):
    """A language toolchain is missing or misconfigured (environment error)."""


class UndefinedMetricError(ApitransError):
    """A metric was requested over an empty collection of outcomes."""


class ValidationError(ApitransError):
    """A domain invariant was violated by caller-supplied data."""
