"""Shared fixtures: tasks, metadata, scripted providers, demo pools."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from apitrans.embedding import MockEmbedder
from apitrans.mappings import ApiMappingRecord, MappingPool, REVIEWED
from apitrans.model import (
    Language,
    TestCase,
    TestMetadata,
    TranslationTask,
    parse_type,
)

DATA_DIR = Path(__file__).parent / "data"
REPO_ROOT = Path(__file__).resolve().parents[1]

JAVA_ADDER = """public class Adder {
    public static int add(int a, int b) { return a + b; }
}"""

PASSING_PYTHON = "def add(a, b):\n    return a + b\n|End-of-Code|"
FAILING_PYTHON = "def add(a, b):\n    return a - b\n|End-of-Code|"


@pytest.fixture
def add_metadata() -> TestMetadata:
    return TestMetadata(
        function_name="add",
        params=(("a", parse_type("int")), ("b", parse_type("int"))),
        return_type=parse_type("int"),
        cases=(
            TestCase(inputs=(2, 3), expected=5),
            TestCase(inputs=(-1, 1), expected=0),
        ),
    )


@pytest.fixture
def java_to_python_task(add_metadata) -> TranslationTask:
    return TranslationTask(
        source_lang=Language.JAVA,
        target_lang=Language.PYTHON,
        source_code=JAVA_ADDER,
        metadata=add_metadata,
        task_id="adder",
    )


@pytest.fixture
def mock_embedder() -> MockEmbedder:
    return MockEmbedder(dimension=256)


def make_pool_record(
    record_id: int,
    source_api: str,
    target_api: str,
    embedder: MockEmbedder,
    status: str = REVIEWED,
) -> ApiMappingRecord:
    return ApiMappingRecord(
        id=record_id,
        source_api=source_api,
        source_embedding=embedder.embed(source_api),
        target_apis=(target_api,),
        description=f"maps {source_api} onto {target_api}",
        caveats="behavioural differences around edge cases apply",
        review_status=status,
    )


@pytest.fixture
def demo_pool(mock_embedder) -> MappingPool:
    apis = [
        ("HashMap.put", "dict assignment"),
        ("Math.max", "max"),
        ("StringBuilder.append", "str concatenation"),
        ("Arrays.sort", "sorted"),
        ("Integer.parseInt", "int"),
        ("System.currentTimeMillis", "time.time"),
    ]
    records = tuple(
        make_pool_record(i, src, tgt, mock_embedder)
        for i, (src, tgt) in enumerate(apis, start=1)
    )
    return MappingPool(
        source_lang=Language.JAVA, target_lang=Language.PYTHON, records=records
    )


def load_golden(name: str) -> str:
    return (DATA_DIR / name).read_text(encoding="utf-8")


def write_manifest(tmp_path: Path, files: dict[str, str], language: str = "python") -> Path:
    """Materialize source files plus a manifest JSON under tmp_path."""
    src_dir = tmp_path / "src"
    src_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, text in files.items():
        path = src_dir / name
        path.write_text(text, encoding="utf-8")
        entries.append({"source_id": name.rsplit(".", 1)[0], "path": str(path)})
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(
        json.dumps({"language": language, "provenance": "test fixture", "entries": entries}),
        encoding="utf-8",
    )
    return manifest_path
