"""Language-neutral domain types shared by every other module.

All types here are immutable after construction and safe to share across
threads. Each carries a canonical JSON encoding (``to_json_dict`` /
``from_json_dict``) used by every file format in the toolkit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

from .errors import FormatError, ValidationError

# Identifier segment: a word not starting with a digit; $ allowed for Java.
_IDENT_SEG = r"(?!\d)[\w$]+"
_QUALIFIED_NAME_RE = re.compile(rf"^{_IDENT_SEG}(\.{_IDENT_SEG})*$")
_SEQUENCE_TOKEN_RE = re.compile(rf"^({_IDENT_SEG}(?:\.{_IDENT_SEG})*)/(\d+)$")

SEQUENCE_SEPARATOR = " -> "


class Language(Enum):
    """A programming language with a registered grammar and toolchain.

    The enum is open to extension: extraction grammars and execution
    toolchains are looked up in registries at runtime, so adding a member
    here plus registry entries is all a new language needs.
    """

    PYTHON = "python"
    JAVA = "java"

    @property
    def display_name(self) -> str:
        return {"python": "Python", "java": "Java"}[self.value]

    @classmethod
    def from_name(cls, name: str) -> "Language":
        normalized = name.strip().lower()
        for member in cls:
            if member.value == normalized:
                return member
        raise ValidationError(f"unknown language: {name!r}")


@dataclass(frozen=True)
class ApiCall:
    """One API invocation as written at a call site.

    ``qualified_name`` is the syntactic call path with receiver expressions
    dropped; a receiver that is a plain identifier chain and was dropped is
    preserved in ``receiver_hint``. ``span`` is a byte-offset range within
    the snippet the call came from; ``(0, 0)`` marks a call reconstructed
    from serialized text, where no span exists.
    """

    qualified_name: str
    arg_count: int
    span: tuple[int, int] = (0, 0)
    receiver_hint: str | None = None

    def __post_init__(self) -> None:
        if not _QUALIFIED_NAME_RE.match(self.qualified_name):
            raise ValidationError(
                f"qualified_name must match ident(.ident)*: {self.qualified_name!r}"
            )
        if self.arg_count < 0:
            raise ValidationError("arg_count must be >= 0")
        start, end = self.span
        if (start, end) != (0, 0) and not (0 <= start < end):
            raise ValidationError(f"span start must precede end: {self.span}")

    @property
    def token(self) -> str:
        return f"{self.qualified_name}/{self.arg_count}"

    def to_json_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "qualified_name": self.qualified_name,
            "arg_count": self.arg_count,
            "span": list(self.span),
        }
        if self.receiver_hint is not None:
            doc["receiver_hint"] = self.receiver_hint
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "ApiCall":
        span = doc.get("span", [0, 0])
        return cls(
            qualified_name=doc["qualified_name"],
            arg_count=int(doc["arg_count"]),
            span=(int(span[0]), int(span[1])),
            receiver_hint=doc.get("receiver_hint"),
        )


@dataclass(frozen=True)
class ApiSequence:
    """Ordered API calls extracted from one function or one program.

    Call order is depth-first pre-order of call sites by span start.
    ``canonical_text`` is a pure function of the calls and doubles as the
    deduplication key downstream.
    """

    language: Language
    calls: tuple[ApiCall, ...]

    def __init__(self, language: Language, calls: Iterable[ApiCall] = ()):
        object.__setattr__(self, "language", language)
        object.__setattr__(self, "calls", tuple(calls))

    @property
    def canonical_text(self) -> str:
        return serialize_sequence(self)

    def __len__(self) -> int:
        return len(self.calls)

    def __bool__(self) -> bool:
        return bool(self.calls)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "language": self.language.value,
            "calls": [c.to_json_dict() for c in self.calls],
            "canonical_text": self.canonical_text,
        }

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "ApiSequence":
        return cls(
            language=Language.from_name(doc["language"]),
            calls=[ApiCall.from_json_dict(c) for c in doc["calls"]],
        )


def serialize_sequence(seq: ApiSequence) -> str:
    """Render a sequence as ``name/argcount`` tokens joined by ``" -> "``.

    Stable across runs; the empty sequence serializes to the empty string.
    """
    return SEQUENCE_SEPARATOR.join(call.token for call in seq.calls)


def parse_sequence(text: str, language: Language) -> ApiSequence:
    """Inverse of :func:`serialize_sequence` on its image.

    Spans are absent in the text form and come back zero-length.
    Raises :class:`FormatError` naming the first offending token.
    """
    stripped = text.strip()
    if not stripped:
        return ApiSequence(language, ())
    calls = []
    for token in stripped.split(SEQUENCE_SEPARATOR):
        m = _SEQUENCE_TOKEN_RE.match(token)
        if m is None:
            raise FormatError(f"malformed sequence token: {token!r}")
        calls.append(ApiCall(qualified_name=m.group(1), arg_count=int(m.group(2))))
    return ApiSequence(language, calls)


@dataclass(frozen=True)
class SnippetOrigin:
    """Where a snippet came from: corpus source id, file path, function name."""

    source_id: str
    path: str
    function_name: str

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "source_id": self.source_id,
            "path": self.path,
            "function_name": self.function_name,
        }

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "SnippetOrigin":
        return cls(doc["source_id"], doc["path"], doc["function_name"])


@dataclass(frozen=True)
class CodeSnippet:
    """A normalized function body: no comments, no blank lines."""

    language: Language
    text: str
    origin: SnippetOrigin

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "language": self.language.value,
            "text": self.text,
            "origin": self.origin.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "CodeSnippet":
        return cls(
            language=Language.from_name(doc["language"]),
            text=doc["text"],
            origin=SnippetOrigin.from_json_dict(doc["origin"]),
        )


# --- standardized test types -------------------------------------------------

_SCALAR_KINDS = ("int", "long", "float", "bool", "string")


@dataclass(frozen=True)
class TypeSpec:
    """A standardized cross-language type: scalar, list<T>, or map<K,V>."""

    kind: str
    params: tuple["TypeSpec", ...] = ()

    def __post_init__(self) -> None:
        if self.kind in _SCALAR_KINDS:
            if self.params:
                raise ValidationError(f"{self.kind} takes no type parameters")
        elif self.kind == "list":
            if len(self.params) != 1:
                raise ValidationError("list takes exactly one type parameter")
        elif self.kind == "map":
            if len(self.params) != 2:
                raise ValidationError("map takes exactly two type parameters")
        else:
            raise ValidationError(f"unknown standardized type: {self.kind!r}")

    def __str__(self) -> str:
        if self.kind == "list":
            return f"list<{self.params[0]}>"
        if self.kind == "map":
            return f"map<{self.params[0]}, {self.params[1]}>"
        return self.kind

    def matches(self, value: Any) -> bool:
        """Whether a parsed JSON value conforms to this type."""
        if self.kind == "int" or self.kind == "long":
            return type(value) is int
        if self.kind == "float":
            return type(value) in (int, float)
        if self.kind == "bool":
            return type(value) is bool
        if self.kind == "string":
            return type(value) is str
        if self.kind == "list":
            return isinstance(value, list) and all(self.params[0].matches(v) for v in value)
        if self.kind == "map":
            return isinstance(value, dict) and all(
                self.params[0].matches(k) and self.params[1].matches(v)
                for k, v in value.items()
            )
        return False


def parse_type(text: str) -> TypeSpec:
    """Parse a standardized type expression such as ``map<string, list<int>>``."""
    spec, rest = _parse_type_inner(text.strip())
    if rest.strip():
        raise FormatError(f"trailing text after type: {rest!r}")
    return spec


def _parse_type_inner(text: str) -> tuple[TypeSpec, str]:
    text = text.lstrip()
    m = re.match(r"[a-z]+", text)
    if not m:
        raise FormatError(f"expected a type name at: {text!r}")
    name = m.group(0)
    rest = text[m.end():].lstrip()
    if name in _SCALAR_KINDS:
        return TypeSpec(name), rest
    if name == "list":
        if not rest.startswith("<"):
            raise FormatError("list requires <T>")
        inner, rest = _parse_type_inner(rest[1:])
        rest = rest.lstrip()
        if not rest.startswith(">"):
            raise FormatError("unclosed list<...>")
        return TypeSpec("list", (inner,)), rest[1:]
    if name == "map":
        if not rest.startswith("<"):
            raise FormatError("map requires <K, V>")
        key, rest = _parse_type_inner(rest[1:])
        rest = rest.lstrip()
        if not rest.startswith(","):
            raise FormatError("map requires two type parameters")
        value, rest = _parse_type_inner(rest[1:])
        rest = rest.lstrip()
        if not rest.startswith(">"):
            raise FormatError("unclosed map<...>")
        return TypeSpec("map", (key, value)), rest[1:]
    raise FormatError(f"unknown standardized type: {name!r}")


def _map_keys_from_json(spec: TypeSpec, value: Any) -> Any:
    """Recursively convert JSON object keys (always strings) back to K."""
    if spec.kind == "list":
        return [_map_keys_from_json(spec.params[0], v) for v in value]
    if spec.kind == "map":
        key_spec, val_spec = spec.params
        out = {}
        for k, v in value.items():
            if key_spec.kind in ("int", "long"):
                k = int(k)
            elif key_spec.kind == "float":
                k = float(k)
            elif key_spec.kind == "bool":
                k = k == "true"
            out[k] = _map_keys_from_json(val_spec, v)
        return out
    if spec.kind == "float" and type(value) is int:
        return float(value)
    return value


def _map_keys_to_json(spec: TypeSpec, value: Any) -> Any:
    if spec.kind == "list":
        return [_map_keys_to_json(spec.params[0], v) for v in value]
    if spec.kind == "map":
        key_spec, val_spec = spec.params
        out = {}
        for k, v in value.items():
            if key_spec.kind == "bool":
                k = "true" if k else "false"
            else:
                k = str(k)
            out[k] = _map_keys_to_json(val_spec, v)
        return out
    return value


@dataclass(frozen=True)
class TestCase:
    """One input tuple and its expected output, typed by the owning metadata."""

    __test__ = False  # keep pytest from collecting this as a test class

    inputs: tuple[Any, ...]
    expected: Any

    def to_json_dict(self, params: tuple[TypeSpec, ...], ret: TypeSpec) -> dict[str, Any]:
        return {
            "inputs": [_map_keys_to_json(t, v) for t, v in zip(params, self.inputs)],
            "expected": _map_keys_to_json(ret, self.expected),
        }


@dataclass(frozen=True)
class TestMetadata:
    """Language-neutral problem description driving harness generation.

    A function signature over standardized types plus input/expected-output
    cases. Every case must match the signature; there must be at least one.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    function_name: str
    params: tuple[tuple[str, TypeSpec], ...]
    return_type: TypeSpec
    cases: tuple[TestCase, ...]

    def __post_init__(self) -> None:
        if not re.match(rf"^{_IDENT_SEG}$", self.function_name):
            raise ValidationError(f"bad function name: {self.function_name!r}")
        if not self.cases:
            raise ValidationError("metadata must define at least one test case")
        for i, case in enumerate(self.cases):
            if len(case.inputs) != len(self.params):
                raise ValidationError(
                    f"case {i}: expected {len(self.params)} inputs, got {len(case.inputs)}"
                )
            for (name, spec), value in zip(self.params, case.inputs):
                if not spec.matches(value):
                    raise ValidationError(
                        f"case {i}: input {name!r} does not match type {spec}"
                    )
            if not self.return_type.matches(case.expected):
                raise ValidationError(
                    f"case {i}: expected value does not match return type {self.return_type}"
                )

    def to_json_dict(self) -> dict[str, Any]:
        param_specs = tuple(spec for _, spec in self.params)
        return {
            "function_name": self.function_name,
            "params": [{"name": n, "type": str(t)} for n, t in self.params],
            "return_type": str(self.return_type),
            "cases": [c.to_json_dict(param_specs, self.return_type) for c in self.cases],
        }

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "TestMetadata":
        params = tuple((p["name"], parse_type(p["type"])) for p in doc["params"])
        ret = parse_type(doc["return_type"])
        cases = []
        for c in doc["cases"]:
            inputs = tuple(
                _map_keys_from_json(spec, v)
                for (_, spec), v in zip(params, c["inputs"])
            )
            cases.append(TestCase(inputs=inputs, expected=_map_keys_from_json(ret, c["expected"])))
        return cls(
            function_name=doc["function_name"],
            params=params,
            return_type=ret,
            cases=tuple(cases),
        )


@dataclass(frozen=True)
class TranslationTask:
    """A source program, its test metadata, and the requested direction."""

    source_lang: Language
    target_lang: Language
    source_code: str
    metadata: TestMetadata
    task_id: str = ""

    def __post_init__(self) -> None:
        if self.source_lang == self.target_lang:
            raise ValidationError("source and target languages must differ")
        if not self.source_code.strip():
            raise ValidationError("source code must be non-empty")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "source_lang": self.source_lang.value,
            "target_lang": self.target_lang.value,
            "source_code": self.source_code,
            "metadata": self.metadata.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "TranslationTask":
        return cls(
            source_lang=Language.from_name(doc["source_lang"]),
            target_lang=Language.from_name(doc["target_lang"]),
            source_code=doc["source_code"],
            metadata=TestMetadata.from_json_dict(doc["metadata"]),
            task_id=doc.get("task_id", ""),
        )


class FaultCategory(Enum):
    SINGLE_API = "SingleApi"
    API_SEQUENCE = "ApiSequence"


class FaultPattern(Enum):
    """The twelve API mistranslation fault patterns used to label failures.

    Seven concern a single API call; five concern the API sequence as a
    whole. Classification is a manual labelling step, never automatic.
    """

    SIMILAR_BUT_INCORRECT_API = ("similar_but_incorrect_api", FaultCategory.SINGLE_API)
    API_TYPE_MISMATCH = ("api_type_mismatch", FaultCategory.SINGLE_API)
    INCORRECT_PARAMETER_TYPE = ("incorrect_parameter_type", FaultCategory.SINGLE_API)
    INCORRECT_RETURN_TYPE = ("incorrect_return_type", FaultCategory.SINGLE_API)
    IMPROPER_PARAMETER_CONSTRAINTS = ("improper_parameter_constraints", FaultCategory.SINGLE_API)
    INCORRECT_PARAMETER_FORMATTING = ("incorrect_parameter_formatting", FaultCategory.SINGLE_API)
    NONEXISTENT_API = ("nonexistent_api", FaultCategory.SINGLE_API)
    MISSING_API_CALLS = ("missing_api_calls", FaultCategory.API_SEQUENCE)
    REDUNDANT_API_CALLS = ("redundant_api_calls", FaultCategory.API_SEQUENCE)
    MISINTERPRETED_API_FUNCTIONALITY = ("misinterpreted_api_functionality", FaultCategory.API_SEQUENCE)
    ITERATION_ERRORS = ("iteration_errors", FaultCategory.API_SEQUENCE)
    VARIABLE_NAME_CONFLICTS = ("variable_name_conflicts", FaultCategory.API_SEQUENCE)

    def __init__(self, pattern_id: str, category: FaultCategory):
        self.pattern_id = pattern_id
        self.category = category

    @classmethod
    def from_id(cls, pattern_id: str) -> "FaultPattern":
        for member in cls:
            if member.pattern_id == pattern_id:
                return member
        raise ValidationError(f"unknown fault pattern: {pattern_id!r}")
