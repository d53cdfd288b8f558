"""Python extraction: golden corpus, segmentation, normalization invariants."""

from __future__ import annotations

import json

import pytest

from apitrans.errors import ConfigurationError, ExtractionError
from apitrans.extraction import (
    extract_api_sequence,
    extract_from_program,
    normalize_source,
    segment_functions,
)
from apitrans.model import CodeSnippet, Language, SnippetOrigin

from conftest import DATA_DIR

GOLDENS = json.loads((DATA_DIR / "golden_python.json").read_text(encoding="utf-8"))


def snippet_of(text: str, name: str = "case") -> CodeSnippet:
    return CodeSnippet(Language.PYTHON, text, SnippetOrigin("test", "test.py", name))


@pytest.mark.parametrize("case", GOLDENS, ids=[c["name"] for c in GOLDENS])
def test_golden_corpus(case):
    seq = extract_api_sequence(snippet_of(case["snippet"], case["name"]))
    assert seq.canonical_text == case["expected"]


def test_golden_corpus_size():
    assert len(GOLDENS) >= 20


# --- segmentation -----------------------------------------------------------

def test_two_top_level_functions():
    text = "def a():\n    return 1\n\ndef b():\n    return 2\n"
    snippets = segment_functions(text, Language.PYTHON)
    assert [s.origin.function_name for s in snippets] == ["a", "b"]


def test_class_with_three_methods():
    text = (
        "class A:\n"
        "    def m(self):\n        return 1\n"
        "    def n(self):\n        return 2\n"
        "    def o(self):\n        return 3\n"
    )
    snippets = segment_functions(text, Language.PYTHON)
    assert [s.origin.function_name for s in snippets] == ["A.m", "A.n", "A.o"]


def test_constants_only_file():
    assert segment_functions("X = 1\nY = 2\n", Language.PYTHON) == []


def test_nested_function_stays_inside_parent():
    text = "def outer():\n    def inner():\n        return 1\n    return inner()\n"
    snippets = segment_functions(text, Language.PYTHON)
    assert [s.origin.function_name for s in snippets] == ["outer"]
    assert "def inner" in snippets[0].text


def test_segmentation_strips_comments_and_blank_lines():
    text = "def f(x):  # trailing comment\n\n    # a full-line comment\n    return x\n"
    snippets = segment_functions(text, Language.PYTHON)
    assert snippets[0].text == "def f(x):\n    return x"


def test_snippets_reparse_and_renormalize_to_identity():
    text = (
        "import math\n\n"
        "def area(r):\n"
        "    # circle\n"
        "    return math.pi * r * r\n\n"
        "class Shape:\n"
        "    def zero(self):\n"
        "        return 0.0\n"
    )
    for snippet in segment_functions(text, Language.PYTHON):
        assert normalize_source(snippet.text, Language.PYTHON) == snippet.text


def test_unsupported_language_is_configuration_error():
    with pytest.raises(ConfigurationError):
        segment_functions("x", object())  # type: ignore[arg-type]


# --- whole-program extraction --------------------------------------------------

def test_single_function_program_equals_snippet_extraction():
    text = "def f(a):\n    print(' '.join(map(str, a)))\n"
    program_seq = extract_from_program(text, Language.PYTHON)
    snippet_seq = extract_api_sequence(segment_functions(text, Language.PYTHON)[0])
    assert program_seq.canonical_text == snippet_seq.canonical_text


def test_two_functions_concatenate_in_file_order():
    text = "def f():\n    alpha()\n\ndef g():\n    beta()\n"
    assert extract_from_program(text, Language.PYTHON).canonical_text == "alpha/0 -> beta/0"


def test_script_level_calls_are_captured():
    text = "import sys\nvals = input().split()\nprint(len(vals))\n"
    seq = extract_from_program(text, Language.PYTHON)
    assert seq.canonical_text == "input/0 -> split/0 -> print/1 -> len/1"


def test_parse_failure_carries_location():
    with pytest.raises(ExtractionError) as err:
        extract_api_sequence(snippet_of("def f(:\n    pass"))
    assert err.value.line is not None


# --- invariants -------------------------------------------------------------------

def test_extraction_is_deterministic():
    text = GOLDENS[0]["snippet"]
    runs = {extract_api_sequence(snippet_of(text)).canonical_text for _ in range(5)}
    assert len(runs) == 1


@pytest.mark.parametrize("case", GOLDENS, ids=[c["name"] for c in GOLDENS])
def test_spans_strictly_increase(case):
    seq = extract_api_sequence(snippet_of(case["snippet"]))
    starts = [c.span[0] for c in seq.calls]
    assert starts == sorted(starts)
    assert len(set(starts)) == len(starts)


@pytest.mark.parametrize("case", GOLDENS, ids=[c["name"] for c in GOLDENS])
def test_normalization_idempotent_on_goldens(case):
    once = normalize_source(case["snippet"], Language.PYTHON)
    assert normalize_source(once, Language.PYTHON) == once


def test_spans_slice_the_callee_name():
    text = "def f(a):\n    print(' '.join(map(str, a)))"
    seq = extract_api_sequence(snippet_of(text))
    raw = text.encode("utf-8")
    names = [raw[c.span[0] : c.span[1]].decode() for c in seq.calls]
    assert names == ["print", "join", "map"]
