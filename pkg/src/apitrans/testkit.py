"""Rule-based test harness generation, sandboxed execution, and the CA metric.

From language-neutral metadata (function signature over standardized types
plus cases) this module emits a complete runnable program per language:
the candidate code plus a main entry that builds each case's inputs, calls
the function, and prints one canonically-serialized result line per case.

The canonical serialization is identical across languages by construction:
integers in decimal, floats in shortest round-trip decimal with Python's
placement rules, booleans ``true``/``false``, strings raw, lists
``[a, b]``, maps ``{k: v}`` sorted by formatted key.

Conventions the candidate code must follow (documented in the README):
Python code defines the metadata function at module level; Java code
defines it as a static method of its first declared class (bare methods
are wrapped in a class automatically).
"""

from __future__ import annotations

import logging
import re
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .errors import GenerationError, ToolchainError, UndefinedMetricError, ValidationError
from .model import Language, TestMetadata, TypeSpec

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0

COMPILE_ERROR = "compile_error"
RUNTIME_ERROR = "runtime_error"
TIMEOUT = "timeout"
WRONG_OUTPUT = "wrong_output"


# --- canonical serialization ---------------------------------------------------

# This source is embedded verbatim into generated Python harnesses and also
# executed here so host-side expected values share the exact same code path.
_PY_FORMAT_SOURCE = '''
def _fmt_float(v):
    return repr(float(v))

def _fmt_value(v, t):
    kind = t[0]
    if v is None:
        return "null"
    if kind == "int" or kind == "long":
        return str(int(v))
    if kind == "float":
        return _fmt_float(v)
    if kind == "bool":
        return "true" if v else "false"
    if kind == "string":
        return str(v)
    if kind == "list":
        return "[" + ", ".join(_fmt_value(x, t[1]) for x in v) + "]"
    if kind == "map":
        items = sorted(
            (_fmt_value(k, t[1]), _fmt_value(w, t[2])) for k, w in v.items()
        )
        return "{" + ", ".join(k + ": " + w for k, w in items) + "}"
    raise ValueError("unsupported type kind: " + str(kind))
'''

_format_ns: dict[str, Any] = {}
exec(_PY_FORMAT_SOURCE, _format_ns)


def _descriptor(spec: TypeSpec) -> tuple:
    if spec.kind == "list":
        return ("list", _descriptor(spec.params[0]))
    if spec.kind == "map":
        return ("map", _descriptor(spec.params[0]), _descriptor(spec.params[1]))
    return (spec.kind,)


def format_value(value: Any, spec: TypeSpec) -> str:
    """Canonical text form of a typed value (one case's output line)."""
    return _format_ns["_fmt_value"](value, _descriptor(spec))


def expected_outputs(metadata: TestMetadata) -> list[str]:
    """The canonical output line for every case, in case order."""
    return [format_value(case.expected, metadata.return_type) for case in metadata.cases]


# --- Python harness ------------------------------------------------------------

def _py_literal(value: Any, spec: TypeSpec) -> str:
    if spec.kind == "float":
        return repr(float(value))
    if spec.kind == "list":
        return "[" + ", ".join(_py_literal(v, spec.params[0]) for v in value) + "]"
    if spec.kind == "map":
        items = ", ".join(
            f"{_py_literal(k, spec.params[0])}: {_py_literal(v, spec.params[1])}"
            for k, v in value.items()
        )
        return "{" + items + "}"
    return repr(value)


def _generate_python(metadata: TestMetadata, code: str) -> str:
    if not re.search(rf"def\s+{re.escape(metadata.function_name)}\s*\(", code):
        raise GenerationError(
            f"candidate code does not define function {metadata.function_name!r}"
        )
    case_lines = []
    for case in metadata.cases:
        args = ", ".join(
            _py_literal(v, spec) for (_, spec), v in zip(metadata.params, case.inputs)
        )
        trailing = "," if len(case.inputs) == 1 else ""
        case_lines.append(f"        ({args}{trailing}),")
    descriptor = repr(_descriptor(metadata.return_type))
    runner = (
        "\n\nimport sys as _sys\n\n"
        "def _run_cases():\n"
        "    _cases = [\n" + "\n".join(case_lines) + "\n    ]\n"
        f"    for _args in _cases:\n"
        f"        _result = {metadata.function_name}(*_args)\n"
        f"        _sys.stdout.write(_fmt_value(_result, {descriptor}) + \"\\n\")\n\n"
        "_run_cases()\n"
    )
    return code.rstrip() + "\n\n" + _PY_FORMAT_SOURCE.strip() + runner


# --- Java harness ---------------------------------------------------------------

_JAVA_PRIMITIVE = {
    "int": "int",
    "long": "long",
    "float": "double",
    "bool": "boolean",
    "string": "String",
}

_JAVA_BOXED = {
    "int": "Integer",
    "long": "Long",
    "float": "Double",
    "bool": "Boolean",
    "string": "String",
}


def _java_type(spec: TypeSpec, boxed: bool = False) -> str:
    if spec.kind == "list":
        return f"java.util.List<{_java_type(spec.params[0], boxed=True)}>"
    if spec.kind == "map":
        key = _java_type(spec.params[0], boxed=True)
        val = _java_type(spec.params[1], boxed=True)
        return f"java.util.Map<{key}, {val}>"
    table = _JAVA_BOXED if boxed else _JAVA_PRIMITIVE
    try:
        return table[spec.kind]
    except KeyError:
        raise GenerationError(f"unsupported type for Java: {spec.kind}") from None


def _java_string_literal(value: str) -> str:
    out = ['"']
    for ch in value:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20 or ord(ch) > 0x7E:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _java_literal(value: Any, spec: TypeSpec) -> str:
    if spec.kind == "int":
        return str(int(value))
    if spec.kind == "long":
        return f"{int(value)}L"
    if spec.kind == "float":
        return repr(float(value))
    if spec.kind == "bool":
        return "true" if value else "false"
    if spec.kind == "string":
        return _java_string_literal(value)
    if spec.kind == "list":
        if not value:
            return f"new java.util.ArrayList<{_java_type(spec.params[0], boxed=True)}>()"
        elems = ", ".join(_java_literal(v, spec.params[0]) for v in value)
        return f"new java.util.ArrayList<>(java.util.Arrays.asList({elems}))"
    if spec.kind == "map":
        key_t = _java_type(spec.params[0], boxed=True)
        val_t = _java_type(spec.params[1], boxed=True)
        puts = " ".join(
            f"put({_java_literal(k, spec.params[0])}, {_java_literal(v, spec.params[1])});"
            for k, v in value.items()
        )
        return f"new java.util.LinkedHashMap<{key_t}, {val_t}>() {{{{ {puts} }}}}"
    raise GenerationError(f"unsupported type for Java literal: {spec.kind}")


_JAVA_FMT_DOUBLE = """
    static String fmtDouble(double v) {
        if (Double.isNaN(v)) return "nan";
        if (Double.isInfinite(v)) return v > 0 ? "inf" : "-inf";
        String sign = (v < 0 || (v == 0.0 && 1.0 / v < 0)) ? "-" : "";
        if (v == 0.0) return sign + "0.0";
        String s = Double.toString(Math.abs(v));
        String mant = s;
        int exp10 = 0;
        int e = s.indexOf('E');
        if (e >= 0) { mant = s.substring(0, e); exp10 = Integer.parseInt(s.substring(e + 1)); }
        int dot = mant.indexOf('.');
        if (dot < 0) dot = mant.length();
        String digits = mant.replace(".", "");
        int pos = dot + exp10;
        int lead = 0;
        while (lead < digits.length() - 1 && digits.charAt(lead) == '0') { lead++; pos--; }
        digits = digits.substring(lead);
        int tail = digits.length();
        while (tail > 1 && digits.charAt(tail - 1) == '0') tail--;
        digits = digits.substring(0, tail);
        if (digits.equals("0")) return sign + "0.0";
        StringBuilder b = new StringBuilder(sign);
        if (pos > 16 || pos <= -4) {
            b.append(digits.charAt(0));
            if (digits.length() > 1) b.append('.').append(digits.substring(1));
            int ex = pos - 1;
            b.append('e').append(ex < 0 ? '-' : '+');
            int ax = Math.abs(ex);
            if (ax < 10) b.append('0');
            b.append(ax);
        } else if (pos <= 0) {
            b.append("0.");
            for (int i = 0; i < -pos; i++) b.append('0');
            b.append(digits);
        } else if (pos >= digits.length()) {
            b.append(digits);
            for (int i = 0; i < pos - digits.length(); i++) b.append('0');
            b.append(".0");
        } else {
            b.append(digits, 0, pos).append('.').append(digits.substring(pos));
        }
        return b.toString();
    }
"""


class _JavaFormatterGen:
    """Monomorphized formatter methods, one per distinct compound type."""

    def __init__(self) -> None:
        self.methods: list[str] = []
        self._names: dict[str, str] = {}

    def formatter_for(self, spec: TypeSpec) -> str:
        if spec.kind in ("int", "long"):
            return "String.valueOf"
        if spec.kind == "float":
            return "fmtDouble"
        if spec.kind == "bool":
            return "fmtBool"
        if spec.kind == "string":
            return "fmtString"
        key = str(spec)
        if key in self._names:
            return self._names[key]
        name = f"fmt{len(self._names)}"
        self._names[key] = name
        if spec.kind == "list":
            inner = self.formatter_for(spec.params[0])
            elem_t = _java_type(spec.params[0], boxed=True)
            self.methods.append(
                f"""
    static String {name}(java.util.List<{elem_t}> v) {{
        StringBuilder b = new StringBuilder("[");
        for (int i = 0; i < v.size(); i++) {{
            if (i > 0) b.append(", ");
            b.append({inner}(v.get(i)));
        }}
        return b.append("]").toString();
    }}
"""
            )
        else:
            key_fmt = self.formatter_for(spec.params[0])
            val_fmt = self.formatter_for(spec.params[1])
            key_t = _java_type(spec.params[0], boxed=True)
            val_t = _java_type(spec.params[1], boxed=True)
            self.methods.append(
                f"""
    static String {name}(java.util.Map<{key_t}, {val_t}> v) {{
        java.util.List<String> parts = new java.util.ArrayList<>();
        for (java.util.Map.Entry<{key_t}, {val_t}> en : v.entrySet()) {{
            parts.add({key_fmt}(en.getKey()) + ": " + {val_fmt}(en.getValue()));
        }}
        java.util.Collections.sort(parts);
        return "{{" + String.join(", ", parts) + "}}";
    }}
"""
            )
        return name


_PUBLIC_TYPE_RE = re.compile(
    r"^(\s*)public(\s+(?:final|abstract|sealed|strictfp)\s)*(\s*(?:class|interface|enum|record)\s)",
    re.MULTILINE,
)
_CLASS_NAME_RE = re.compile(r"\bclass\s+([A-Za-z_$][\w$]*)")
_IMPORT_RE = re.compile(r"^\s*import\s+[^;]+;\s*$", re.MULTILINE)
_PACKAGE_RE = re.compile(r"^\s*package\s+[^;]+;\s*$", re.MULTILINE)


def _prepare_java_candidate(code: str, function_name: str) -> tuple[str, str, list[str]]:
    """Returns (candidate body, entry class name, hoisted import lines)."""
    if not re.search(rf"\b{re.escape(function_name)}\s*\(", code):
        raise GenerationError(
            f"candidate code does not define function {function_name!r}"
        )
    imports = [m.group(0).strip() for m in _IMPORT_RE.finditer(code)]
    body = _IMPORT_RE.sub("", code)
    body = _PACKAGE_RE.sub("", body)
    body = _PUBLIC_TYPE_RE.sub(lambda m: m.group(1) + (m.group(2) or "").lstrip() + m.group(3).lstrip(), body)
    m = _CLASS_NAME_RE.search(body)
    if m:
        entry = m.group(1)
    else:
        entry = "Solution"
        body = "class Solution {\n" + body.strip() + "\n}"
    return body.strip(), entry, imports


def _generate_java(metadata: TestMetadata, code: str) -> str:
    body, entry, imports = _prepare_java_candidate(code, metadata.function_name)
    gen = _JavaFormatterGen()
    ret_fmt = gen.formatter_for(metadata.return_type)
    case_blocks = []
    for i, case in enumerate(metadata.cases):
        arg_decls = []
        arg_names = []
        for j, ((name, spec), value) in enumerate(zip(metadata.params, case.inputs)):
            var = f"a{i}_{j}"
            arg_decls.append(
                f"        {_java_type(spec)} {var} = {_java_literal(value, spec)};"
            )
            arg_names.append(var)
        call = f"{entry}.{metadata.function_name}({', '.join(arg_names)})"
        case_blocks.append(
            "\n".join(arg_decls)
            + f"\n        System.out.println({ret_fmt}({call}));"
        )
    import_block = "\n".join(dict.fromkeys(imports))
    if import_block:
        import_block += "\n\n"
    return (
        import_block
        + body
        + "\n\npublic class Main {\n"
        + _JAVA_FMT_DOUBLE
        + """
    static String fmtBool(boolean v) { return v ? "true" : "false"; }

    static String fmtString(String v) { return v; }
"""
        + "".join(gen.methods)
        + "\n    public static void main(String[] args) {\n"
        + "\n".join(case_blocks)
        + "\n    }\n}\n"
    )


def generate_harness(metadata: TestMetadata, code: str, language: Language) -> str:
    """A complete runnable program: candidate code plus the case runner.

    Deterministic: identical (metadata, code) yields identical text.
    """
    if language == Language.PYTHON:
        return _generate_python(metadata, code)
    if language == Language.JAVA:
        return _generate_java(metadata, code)
    raise GenerationError(f"no harness generator for language {language.value!r}")


# --- execution -------------------------------------------------------------------

@dataclass(frozen=True)
class ToolchainSpec:
    """How to compile and run one language's programs."""

    language: Language
    file_name: str
    run_cmd: tuple[str, ...]
    compile_cmd: tuple[str, ...] | None = None

    def substitute(self, cmd: tuple[str, ...], file_path: Path) -> list[str]:
        return [
            part.format(file=str(file_path), dir=str(file_path.parent), stem=file_path.stem)
            for part in cmd
        ]


def default_toolchains() -> dict[Language, ToolchainSpec]:
    return {
        Language.PYTHON: ToolchainSpec(
            language=Language.PYTHON,
            file_name="harness.py",
            run_cmd=(sys.executable, "{file}"),
        ),
        Language.JAVA: ToolchainSpec(
            language=Language.JAVA,
            file_name="Main.java",
            compile_cmd=("javac", "{file}"),
            run_cmd=("java", "-cp", "{dir}", "Main"),
        ),
    }


def toolchain_available(spec: ToolchainSpec) -> bool:
    """Whether the toolchain's binaries resolve on PATH."""
    for cmd in filter(None, [spec.compile_cmd, spec.run_cmd]):
        binary = cmd[0]
        if "{" not in binary and shutil.which(binary) is None:
            return False
    return True


@dataclass(frozen=True)
class CaseResult:
    passed: bool
    actual: str | None
    stderr: str
    duration: float
    failure_kind: str | None

    def __post_init__(self) -> None:
        if self.passed and self.failure_kind is not None:
            raise ValidationError("passing case cannot carry a failure kind")
        if not self.passed and self.failure_kind is None:
            raise ValidationError("failing case must carry a failure kind")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "actual": self.actual,
            "stderr": self.stderr,
            "duration": self.duration,
            "failure_kind": self.failure_kind,
        }

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "CaseResult":
        return cls(
            passed=doc["passed"],
            actual=doc.get("actual"),
            stderr=doc.get("stderr", ""),
            duration=doc.get("duration", 0.0),
            failure_kind=doc.get("failure_kind"),
        )


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # keep pytest from collecting this as a test class

    cases: tuple[CaseResult, ...]

    @property
    def pass_all(self) -> bool:
        return all(c.passed for c in self.cases)

    def to_json_dict(self) -> dict[str, Any]:
        return {"pass_all": self.pass_all, "cases": [c.to_json_dict() for c in self.cases]}

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "TestReport":
        return cls(cases=tuple(CaseResult.from_json_dict(c) for c in doc["cases"]))


def all_failed_report(case_count: int, kind: str, detail: str) -> TestReport:
    """A synthetic report for programs that never got as far as running."""
    case = CaseResult(passed=False, actual=None, stderr=detail, duration=0.0, failure_kind=kind)
    return TestReport(cases=tuple([case] * case_count))


def execute(
    program: str,
    language: Language,
    expected: Sequence[str],
    timeout: float = DEFAULT_TIMEOUT,
    toolchains: dict[Language, ToolchainSpec] | None = None,
) -> TestReport:
    """Compile (if needed) and run a harness, comparing per-case output lines.

    All artifacts live in a private temporary directory which is removed
    afterwards; comparison ignores trailing whitespace but nothing else.
    A missing toolchain raises :class:`ToolchainError` rather than failing
    the cases.
    """
    chain = (toolchains or default_toolchains()).get(language)
    if chain is None:
        raise ToolchainError(f"no toolchain registered for language {language.value!r}")
    workdir = Path(tempfile.mkdtemp(prefix="apitrans-run-"))
    try:
        file_path = workdir / chain.file_name
        file_path.write_text(program, encoding="utf-8")
        if chain.compile_cmd:
            cmd = chain.substitute(chain.compile_cmd, file_path)
            try:
                compiled = subprocess.run(
                    cmd, cwd=workdir, capture_output=True, text=True, timeout=max(timeout, 60.0)
                )
            except FileNotFoundError as exc:
                raise ToolchainError(f"toolchain binary not found: {cmd[0]}") from exc
            except subprocess.TimeoutExpired:
                return all_failed_report(len(expected), COMPILE_ERROR, "compilation timed out")
            if compiled.returncode != 0:
                return all_failed_report(len(expected), COMPILE_ERROR, compiled.stderr)
        cmd = chain.substitute(chain.run_cmd, file_path)
        started = time.monotonic()
        timed_out = False
        try:
            proc = subprocess.run(
                cmd, cwd=workdir, capture_output=True, text=True, timeout=timeout
            )
            stdout, stderr, returncode = proc.stdout, proc.stderr, proc.returncode
        except FileNotFoundError as exc:
            raise ToolchainError(f"toolchain binary not found: {cmd[0]}") from exc
        except subprocess.TimeoutExpired as exc:
            timed_out = True
            stdout = _decode(exc.stdout)
            stderr = _decode(exc.stderr)
            returncode = -1
        duration = time.monotonic() - started
        return _compare(stdout, stderr, returncode, timed_out, expected, duration)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def _decode(raw: bytes | str | None) -> str:
    if raw is None:
        return ""
    if isinstance(raw, bytes):
        return raw.decode("utf-8", errors="replace")
    return raw


def _compare(
    stdout: str,
    stderr: str,
    returncode: int,
    timed_out: bool,
    expected: Sequence[str],
    duration: float,
) -> TestReport:
    lines = stdout.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    cases = []
    for i, want in enumerate(expected):
        if i < len(lines):
            actual = lines[i]
            if actual.rstrip() == want.rstrip():
                cases.append(CaseResult(True, actual, "", duration, None))
            else:
                cases.append(CaseResult(False, actual, stderr, duration, WRONG_OUTPUT))
        elif timed_out:
            cases.append(CaseResult(False, None, stderr, duration, TIMEOUT))
        else:
            cases.append(CaseResult(False, None, stderr, duration, RUNTIME_ERROR))
    return TestReport(cases=tuple(cases))


def run_candidate(
    metadata: TestMetadata,
    code: str,
    language: Language,
    timeout: float = DEFAULT_TIMEOUT,
    toolchains: dict[Language, ToolchainSpec] | None = None,
) -> TestReport:
    """Generate the harness for ``code`` and execute it against metadata."""
    harness = generate_harness(metadata, code, language)
    return execute(
        harness,
        language,
        expected_outputs(metadata),
        timeout=timeout,
        toolchains=toolchains,
    )


def computational_accuracy(outcomes: Sequence[bool]) -> float:
    """Fraction of first-attempt verdicts that passed every test case."""
    if not outcomes:
        raise UndefinedMetricError("computational accuracy over zero outcomes")
    return sum(1 for o in outcomes if o) / len(outcomes)
