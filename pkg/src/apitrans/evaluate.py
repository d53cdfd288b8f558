"""Experiment runners: retrieval precision, CA benchmark tables, parameter sweeps.

The retrieval benchmark inserts gold targets into an index by default (a
flag lets callers query a pre-built, larger index instead); whichever
universe was used is recorded in the report.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .embedding import Embedder, VectorIndex
from .errors import FormatError, UndefinedMetricError, ValidationError
from .model import ApiSequence, FaultCategory, FaultPattern, Language, TestMetadata, TranslationTask, parse_sequence
from .pipeline import (
    STAGE_FAILED,
    BatchSummary,
    PipelineConfig,
    TranslationOutcome,
    translate_batch,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RetrievalPair:
    """A source sequence and the gold target sequence it should retrieve."""

    source_sequence: ApiSequence
    gold_target_sequence: ApiSequence

    def __post_init__(self) -> None:
        if not self.source_sequence or not self.gold_target_sequence:
            raise ValidationError("retrieval pairs need non-empty sequences on both sides")
        if self.source_sequence.language == self.gold_target_sequence.language:
            raise ValidationError("retrieval pair languages must differ")


def load_retrieval_pairs(path: str | Path) -> list[RetrievalPair]:
    """Read pairs from JSONL of {source_lang, target_lang, source_seq, gold_seq}."""
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            pairs.append(
                RetrievalPair(
                    source_sequence=parse_sequence(
                        doc["source_seq"], Language.from_name(doc["source_lang"])
                    ),
                    gold_target_sequence=parse_sequence(
                        doc["gold_seq"], Language.from_name(doc["target_lang"])
                    ),
                )
            )
        except (KeyError, json.JSONDecodeError) as exc:
            raise FormatError(f"{path}:{lineno}: bad retrieval pair: {exc}") from exc
    return pairs


def build_gold_index(pairs: Sequence[RetrievalPair], embedder: Embedder) -> VectorIndex:
    """An index holding exactly the gold targets (the default universe)."""
    if not pairs:
        raise UndefinedMetricError("no retrieval pairs")
    first = embedder.embed(pairs[0].gold_target_sequence.canonical_text)
    index = VectorIndex(dimension=first.dimension)
    index.add(1, first, payload=pairs[0].gold_target_sequence)
    seen = {pairs[0].gold_target_sequence.canonical_text}
    next_id = 2
    for pair in pairs[1:]:
        text = pair.gold_target_sequence.canonical_text
        if text in seen:
            continue
        seen.add(text)
        index.add(next_id, embedder.embed(text), payload=pair.gold_target_sequence)
        next_id += 1
    return index


def precision_at_1(
    pairs: Sequence[RetrievalPair],
    index: VectorIndex,
    embedder: Embedder,
) -> float:
    """Fraction of pairs whose top-1 hit matches the gold canonical text."""
    if not pairs:
        raise UndefinedMetricError("precision@1 over zero pairs")
    hits = 0
    for pair in pairs:
        query = embedder.embed(pair.source_sequence.canonical_text)
        top = index.query_topk(query, 1)
        if not top:
            continue
        payload = index.payload(top[0][0])
        canonical = (
            payload.canonical_text
            if isinstance(payload, ApiSequence)
            else payload.sequence.canonical_text
        )
        if canonical == pair.gold_target_sequence.canonical_text:
            hits += 1
    return hits / len(pairs)


# --- CA benchmark ----------------------------------------------------------------

_SOURCE_FILES = {"source.py": Language.PYTHON, "source.java": Language.JAVA}


def load_benchmark_tasks(
    dataset_dir: str | Path,
    target_of: Mapping[Language, Language] | None = None,
) -> list[TranslationTask]:
    """One task per problem directory ({metadata.json, source.py|source.java}).

    Malformed problem directories are skipped with a warning.
    """
    dataset_dir = Path(dataset_dir)
    if not dataset_dir.is_dir():
        raise ValidationError(f"dataset directory not found: {dataset_dir}")
    target_of = target_of or {Language.PYTHON: Language.JAVA, Language.JAVA: Language.PYTHON}
    tasks = []
    for problem_dir in sorted(p for p in dataset_dir.iterdir() if p.is_dir()):
        meta_path = problem_dir / "metadata.json"
        source = None
        source_lang = None
        for name, lang in _SOURCE_FILES.items():
            if (problem_dir / name).exists():
                source = problem_dir / name
                source_lang = lang
                break
        if source is None or not meta_path.exists():
            logger.warning("skipping malformed problem dir %s", problem_dir)
            continue
        try:
            metadata = TestMetadata.from_json_dict(
                json.loads(meta_path.read_text(encoding="utf-8"))
            )
            tasks.append(
                TranslationTask(
                    source_lang=source_lang,
                    target_lang=target_of[source_lang],
                    source_code=source.read_text(encoding="utf-8"),
                    metadata=metadata,
                    task_id=problem_dir.name,
                )
            )
        except Exception as exc:  # noqa: BLE001 - malformed dirs are skipped, not fatal
            logger.warning("skipping problem dir %s: %s", problem_dir, exc)
    return tasks


@dataclass(frozen=True)
class CaBenchmarkResult:
    """CA per direction plus the per-stage breakdown behind each number."""

    directions: dict[str, float]
    summaries: dict[str, BatchSummary]
    outcomes: dict[str, list[TranslationOutcome | None]]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "directions": dict(self.directions),
            "summaries": {d: s.to_json_dict() for d, s in self.summaries.items()},
        }


def direction_key(source: Language, target: Language) -> str:
    return f"{source.value}->{target.value}"


def run_ca_benchmark(
    dataset_dir: str | Path,
    config: PipelineConfig,
    parallelism: int = 1,
) -> CaBenchmarkResult:
    """Translate every problem, grouped by direction, and tabulate CA."""
    tasks = load_benchmark_tasks(dataset_dir)
    if not tasks:
        raise ValidationError(f"dataset {dataset_dir} contains no usable problems")
    by_direction: dict[str, list[TranslationTask]] = {}
    for task in tasks:
        by_direction.setdefault(direction_key(task.source_lang, task.target_lang), []).append(task)
    directions = {}
    summaries = {}
    outcomes = {}
    for direction in sorted(by_direction):
        outs, summary = translate_batch(by_direction[direction], config, parallelism)
        directions[direction] = summary.ca
        summaries[direction] = summary
        outcomes[direction] = outs
    return CaBenchmarkResult(directions=directions, summaries=summaries, outcomes=outcomes)


# --- parameter sweep --------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    """CA across one axis (k or n), the other held at its default."""

    axis: str
    points: tuple[tuple[int, float], ...]
    direction: str
    dataset_id: str

    def __post_init__(self) -> None:
        values = [v for v, _ in self.points]
        if any(a >= b for a, b in zip(values, values[1:])):
            raise ValidationError("sweep values must be strictly increasing")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "axis": self.axis,
            "direction": self.direction,
            "dataset_id": self.dataset_id,
            "points": [{"value": v, "ca": ca} for v, ca in self.points],
        }


def parameter_sweep(
    dataset_dir: str | Path,
    axis: str,
    values: Sequence[int],
    config: PipelineConfig,
    direction: str | None = None,
    parallelism: int = 1,
) -> list[SweepResult]:
    """Run the CA benchmark once per axis value, holding the other axis fixed
    (k=1 while sweeping n, n=5 while sweeping k)."""
    if axis not in ("k", "n"):
        raise ValidationError("axis must be 'k' or 'n'")
    if not values:
        raise ValidationError("sweep requires at least one value")
    if any(a >= b for a, b in zip(values, values[1:])):
        raise ValidationError("sweep values must be strictly increasing")
    points_by_direction: dict[str, list[tuple[int, float]]] = {}
    for value in values:
        swept = replace(config, k=value, n=5) if axis == "k" else replace(config, k=1, n=value)
        result = run_ca_benchmark(dataset_dir, swept, parallelism)
        for dir_key, ca in result.directions.items():
            if direction is not None and dir_key != direction:
                continue
            points_by_direction.setdefault(dir_key, []).append((value, ca))
    dataset_id = Path(dataset_dir).name
    return [
        SweepResult(axis=axis, points=tuple(points), direction=dir_key, dataset_id=dataset_id)
        for dir_key, points in sorted(points_by_direction.items())
    ]


# --- fault distribution -------------------------------------------------------------

@dataclass(frozen=True)
class FaultDistribution:
    """Counts and fractions per pattern and per category over labeled failures."""

    labeled_failures: int
    pattern_counts: dict[FaultPattern, int]
    category_counts: dict[FaultCategory, int]

    def pattern_fractions(self) -> dict[FaultPattern, float]:
        if not self.labeled_failures:
            return {}
        return {p: c / self.labeled_failures for p, c in self.pattern_counts.items()}

    def category_fractions(self) -> dict[FaultCategory, float]:
        if not self.labeled_failures:
            return {}
        return {c: n / self.labeled_failures for c, n in self.category_counts.items()}

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "labeled_failures": self.labeled_failures,
            "patterns": {
                p.pattern_id: {
                    "count": c,
                    "fraction": c / self.labeled_failures if self.labeled_failures else 0.0,
                    "category": p.category.value,
                }
                for p, c in sorted(self.pattern_counts.items(), key=lambda it: it[0].pattern_id)
            },
            "categories": {
                c.value: {
                    "count": n,
                    "fraction": n / self.labeled_failures if self.labeled_failures else 0.0,
                }
                for c, n in sorted(self.category_counts.items(), key=lambda it: it[0].value)
            },
        }


def fault_report(
    outcomes: Iterable[TranslationOutcome],
    labels: Mapping[str, Sequence[FaultPattern]],
) -> FaultDistribution:
    """Tabulate manually assigned fault labels over failed outcomes.

    A label pointing at a passing (or unknown) task is a validation error.
    Multi-label failures count once per pattern but once per category.
    """
    failed_ids = set()
    all_ids = set()
    for outcome in outcomes:
        all_ids.add(outcome.task.task_id)
        if outcome.stage == STAGE_FAILED:
            failed_ids.add(outcome.task.task_id)
    pattern_counts: dict[FaultPattern, int] = {}
    category_counts: dict[FaultCategory, int] = {}
    labeled = 0
    for task_id, patterns in labels.items():
        if task_id not in all_ids:
            raise ValidationError(f"label references unknown task {task_id!r}")
        if task_id not in failed_ids:
            raise ValidationError(f"label references passing task {task_id!r}")
        if not patterns:
            continue
        labeled += 1
        for pattern in patterns:
            pattern_counts[pattern] = pattern_counts.get(pattern, 0) + 1
        for category in {p.category for p in patterns}:
            category_counts[category] = category_counts.get(category, 0) + 1
    return FaultDistribution(
        labeled_failures=labeled,
        pattern_counts=pattern_counts,
        category_counts=category_counts,
    )
