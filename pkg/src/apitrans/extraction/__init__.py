"""Function segmentation and API-sequence extraction.

Public surface: :func:`segment_functions`, :func:`extract_api_sequence`,
:func:`extract_from_program`, and :func:`normalize_source`, all dispatched
through a per-language grammar registry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from types import ModuleType

from ..errors import ConfigurationError, ExtractionError
from ..model import ApiCall, ApiSequence, CodeSnippet, Language
from . import java_lang, python_lang

logger = logging.getLogger(__name__)

_FRONTENDS: dict[Language, ModuleType] = {
    Language.PYTHON: python_lang,
    Language.JAVA: java_lang,
}


def register_frontend(language: Language, frontend: ModuleType) -> None:
    """Register a grammar for a new language (needs normalize/segment/extract_calls)."""
    _FRONTENDS[language] = frontend


def _frontend(language: Language) -> ModuleType:
    try:
        return _FRONTENDS[language]
    except KeyError:
        raise ConfigurationError(
            f"no extraction grammar registered for language {language.value!r}"
        ) from None


@dataclass
class ExtractionStats:
    """Counters accumulated over a corpus build."""

    files_seen: int = 0
    functions_found: int = 0
    functions_parsed: int = 0
    sequences_nonempty: int = 0

    def merge(self, other: "ExtractionStats") -> None:
        self.files_seen += other.files_seen
        self.functions_found += other.functions_found
        self.functions_parsed += other.functions_parsed
        self.sequences_nonempty += other.sequences_nonempty

    def to_json_dict(self) -> dict[str, int]:
        return {
            "files_seen": self.files_seen,
            "functions_found": self.functions_found,
            "functions_parsed": self.functions_parsed,
            "sequences_nonempty": self.sequences_nonempty,
        }


def normalize_source(text: str, language: Language) -> str:
    """Remove comments, blank lines, and redundant space runs."""
    return _frontend(language).normalize(text)


def segment_functions(
    file_text: str,
    language: Language,
    source_id: str = "",
    path: str = "",
) -> list[CodeSnippet]:
    """Split a source file into normalized function-level snippets, in file order."""
    return _frontend(language).segment(file_text, source_id=source_id, path=path)


def extract_api_sequence(snippet: CodeSnippet) -> ApiSequence:
    """API calls of one snippet in depth-first pre-order of call sites."""
    calls = _frontend(snippet.language).extract_calls(snippet.text)
    return ApiSequence(snippet.language, calls)


def extract_from_program(program_text: str, language: Language) -> ApiSequence:
    """The query sequence for a whole program.

    Scans the full normalized text, so per-function sequences concatenate
    in file order and top-level statements (script-style programs)
    contribute their calls too.
    """
    frontend = _frontend(language)
    normalized = frontend.normalize(program_text)
    if not normalized:
        return ApiSequence(language, ())
    calls: list[ApiCall] = frontend.extract_calls(normalized)
    return ApiSequence(language, calls)


__all__ = [
    "ExtractionStats",
    "extract_api_sequence",
    "extract_from_program",
    "normalize_source",
    "register_frontend",
    "segment_functions",
    "ExtractionError",
]
