"""Domain model: serialization round-trips, validation, the fault taxonomy."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from apitrans.errors import FormatError, ValidationError
from apitrans.model import (
    ApiCall,
    ApiSequence,
    FaultCategory,
    FaultPattern,
    Language,
    TestCase,
    TestMetadata,
    TranslationTask,
    parse_sequence,
    parse_type,
    serialize_sequence,
)

# --- serialize / parse -------------------------------------------------------

def test_serialize_joins_tokens():
    seq = ApiSequence(Language.PYTHON, [ApiCall("join", 1), ApiCall("map", 2)])
    assert serialize_sequence(seq) == "join/1 -> map/2"


def test_serialize_empty_sequence():
    assert serialize_sequence(ApiSequence(Language.PYTHON, [])) == ""


def test_parse_round_trip_simple():
    seq = parse_sequence("join/1 -> map/2", Language.PYTHON)
    assert len(seq) == 2
    assert seq.calls[0].qualified_name == "join"
    assert seq.calls[1].arg_count == 2


def test_parse_empty_text():
    assert len(parse_sequence("", Language.JAVA)) == 0


def test_parse_rejects_malformed_token():
    with pytest.raises(FormatError, match="bad token!!"):
        parse_sequence("bad token!!", Language.PYTHON)


_ident = st.from_regex(r"[a-z_][a-z0-9_]{0,5}", fullmatch=True)
_name = st.lists(_ident, min_size=1, max_size=3).map(".".join)
_call = st.builds(
    lambda n, c: ApiCall(qualified_name=n, arg_count=c),
    _name,
    st.integers(min_value=0, max_value=9),
)
_sequence = st.builds(
    lambda calls: ApiSequence(Language.PYTHON, calls),
    st.lists(_call, max_size=8),
)


@given(_sequence)
def test_round_trip_identity(seq):
    assert parse_sequence(serialize_sequence(seq), Language.PYTHON) == ApiSequence(
        Language.PYTHON, [ApiCall(c.qualified_name, c.arg_count) for c in seq.calls]
    )


@given(_sequence, _sequence)
def test_canonical_text_equality_iff_call_list_equality(a, b):
    same_calls = [(c.qualified_name, c.arg_count) for c in a.calls] == [
        (c.qualified_name, c.arg_count) for c in b.calls
    ]
    assert (a.canonical_text == b.canonical_text) == same_calls


# --- ApiCall validation --------------------------------------------------------

def test_api_call_rejects_bad_name():
    with pytest.raises(ValidationError):
        ApiCall("9bad", 0)
    with pytest.raises(ValidationError):
        ApiCall("", 0)
    with pytest.raises(ValidationError):
        ApiCall("a..b", 0)


def test_api_call_rejects_negative_arity():
    with pytest.raises(ValidationError):
        ApiCall("ok", -1)


def test_api_call_span_rules():
    ApiCall("ok", 0, span=(0, 0))  # zero-length marks "no span"
    ApiCall("ok", 0, span=(3, 8))
    with pytest.raises(ValidationError):
        ApiCall("ok", 0, span=(5, 5))
    with pytest.raises(ValidationError):
        ApiCall("ok", 0, span=(8, 3))


def test_sequence_json_round_trip():
    seq = ApiSequence(
        Language.JAVA,
        [ApiCall("Math.max", 2, span=(4, 12), receiver_hint=None), ApiCall("trim", 0)],
    )
    again = ApiSequence.from_json_dict(seq.to_json_dict())
    assert again == seq
    assert seq.to_json_dict()["canonical_text"] == "Math.max/2 -> trim/0"


# --- standardized types ----------------------------------------------------------

def test_parse_type_scalars_and_compounds():
    assert str(parse_type("int")) == "int"
    assert str(parse_type("list<float>")) == "list<float>"
    assert str(parse_type("map<string, list<int>>")) == "map<string, list<int>>"


def test_parse_type_rejects_garbage():
    for bad in ("frobnicate", "list", "list<int", "map<int>", "int extra"):
        with pytest.raises(FormatError):
            parse_type(bad)


def test_metadata_validates_cases():
    with pytest.raises(ValidationError, match="at least one test case"):
        TestMetadata("f", (("x", parse_type("int")),), parse_type("int"), ())
    with pytest.raises(ValidationError, match="does not match type"):
        TestMetadata(
            "f",
            (("x", parse_type("int")),),
            parse_type("int"),
            (TestCase(inputs=("nope",), expected=1),),
        )
    with pytest.raises(ValidationError, match="expected 1 inputs"):
        TestMetadata(
            "f",
            (("x", parse_type("int")),),
            parse_type("int"),
            (TestCase(inputs=(1, 2), expected=1),),
        )


def test_metadata_bool_is_not_int():
    with pytest.raises(ValidationError):
        TestMetadata(
            "f",
            (("x", parse_type("int")),),
            parse_type("int"),
            (TestCase(inputs=(True,), expected=1),),
        )


def test_metadata_json_round_trip(add_metadata=None):
    meta = TestMetadata(
        function_name="mix",
        params=(("a", parse_type("map<int, string>")), ("b", parse_type("list<float>"))),
        return_type=parse_type("bool"),
        cases=(TestCase(inputs=({1: "x", 2: "y"}, [1.5, 2.0]), expected=True),),
    )
    again = TestMetadata.from_json_dict(meta.to_json_dict())
    assert again == meta


def test_task_requires_distinct_languages(add_metadata=None):
    meta = TestMetadata(
        "f", (("x", parse_type("int")),), parse_type("int"), (TestCase((1,), 1),)
    )
    with pytest.raises(ValidationError):
        TranslationTask(Language.PYTHON, Language.PYTHON, "def f(x): return x", meta)


# --- fault taxonomy ---------------------------------------------------------------

def test_fault_pattern_census():
    singles = [p for p in FaultPattern if p.category == FaultCategory.SINGLE_API]
    sequences = [p for p in FaultPattern if p.category == FaultCategory.API_SEQUENCE]
    assert len(singles) == 7
    assert len(sequences) == 5
    assert len(FaultPattern) == 12


def test_fault_pattern_lookup():
    assert FaultPattern.from_id("missing_api_calls") == FaultPattern.MISSING_API_CALLS
    with pytest.raises(ValidationError):
        FaultPattern.from_id("nope")
