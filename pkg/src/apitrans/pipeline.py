"""End-to-end orchestration: translate, self-test, retrieve, re-translate.

Flow per task: render the direct-translation prompt, run the candidate
against generated tests, and stop on success. On failure, retrieve target
sequences (top-k), obtain one back-translation exchange per retrieved
sequence, retrieve per-API mappings (top-n, deduplicated), render the
knowledge-augmented prompt on top of the recorded conversation, and test
the re-translation. Exactly one augmentation round, then the task
terminates whichever way the final tests went.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from .corpus import SequenceRecord, load_vector_index
from .embedding import Embedder, VectorIndex
from .errors import ApitransError, EmptyTranslationError, ValidationError
from .extraction import extract_from_program
from .llm import (
    ChatProvider,
    Conversation,
    Message,
    complete,
    parse_code_response,
    render_prompt1,
    render_prompt2,
    render_prompt3,
)
from .mappings import ApiMappingRecord, MappingPool, retrieve_mappings
from .model import ApiSequence, FaultPattern, Language, TranslationTask
from .testkit import (
    DEFAULT_TIMEOUT,
    TestReport,
    ToolchainSpec,
    all_failed_report,
    computational_accuracy,
    generate_harness,
    run_candidate,
)

logger = logging.getLogger(__name__)

STAGE_INITIAL_PASS = "initial_pass"
STAGE_AUGMENTED_PASS = "augmented_pass"
STAGE_FAILED = "failed"


@dataclass
class PipelineConfig:
    """Everything one translation run needs; k and n default to the sweet spot."""

    llm: ChatProvider
    embedder: Embedder
    index: VectorIndex | str | Path | None = None
    pool: MappingPool | str | Path | None = None
    k: int = 1
    n: int = 5
    timeout: float = DEFAULT_TIMEOUT
    toolchains: dict[Language, ToolchainSpec] | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.n < 1:
            raise ValidationError("n must be >= 1")

    def load_index(self) -> VectorIndex | None:
        if self.index is None or isinstance(self.index, VectorIndex):
            return self.index
        loaded = load_vector_index(self.index)
        self.index = loaded
        return loaded

    def load_pool(self) -> MappingPool | None:
        if self.pool is None or isinstance(self.pool, MappingPool):
            return self.pool
        loaded = MappingPool.load(self.pool)
        self.pool = loaded
        return loaded


@dataclass(frozen=True)
class RetrievedKnowledge:
    """What augmentation saw: sequences with scores, their back-translations
    (aligned one-to-one), and the deduplicated mapping records."""

    target_sequences: tuple[tuple[SequenceRecord, float], ...]
    back_translations: tuple[str, ...]
    api_mappings: tuple[ApiMappingRecord, ...]

    def __post_init__(self) -> None:
        if len(self.back_translations) != len(self.target_sequences):
            raise ValidationError("back_translations must align with target_sequences")
        scores = [score for _, score in self.target_sequences]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValidationError("retrieved sequence scores must be non-increasing")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "target_sequences": [
                {"record": record.to_json_dict(), "score": score}
                for record, score in self.target_sequences
            ],
            "back_translations": list(self.back_translations),
            "api_mappings": [r.to_json_dict() for r in self.api_mappings],
        }


@dataclass(frozen=True)
class TranslationOutcome:
    """The full record of one task: codes, reports, knowledge, transcript."""

    task: TranslationTask
    stage: str
    initial_code: str
    initial_report: TestReport
    transcript: tuple[Message, ...]
    knowledge: RetrievedKnowledge | None = None
    final_code: str | None = None
    final_report: TestReport | None = None
    fault_labels: tuple[FaultPattern, ...] | None = None

    def __post_init__(self) -> None:
        if self.stage == STAGE_INITIAL_PASS and self.knowledge is not None:
            raise ValidationError("initial_pass outcomes carry no retrieved knowledge")
        if self.stage in (STAGE_AUGMENTED_PASS, STAGE_FAILED) and self.knowledge is None:
            raise ValidationError(f"{self.stage} outcomes must carry retrieved knowledge")
        if self.stage == STAGE_FAILED and self.final_report is not None and self.final_report.pass_all:
            raise ValidationError("failed outcomes cannot have a passing final report")

    @property
    def passed(self) -> bool:
        return self.stage in (STAGE_INITIAL_PASS, STAGE_AUGMENTED_PASS)

    def to_json_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "task": self.task.to_json_dict(),
            "stage": self.stage,
            "initial_code": self.initial_code,
            "initial_report": self.initial_report.to_json_dict(),
            "transcript": [m.to_json_dict() for m in self.transcript],
        }
        if self.knowledge is not None:
            doc["knowledge"] = self.knowledge.to_json_dict()
        if self.final_code is not None:
            doc["final_code"] = self.final_code
        if self.final_report is not None:
            doc["final_report"] = self.final_report.to_json_dict()
        if self.fault_labels is not None:
            doc["fault_labels"] = [p.pattern_id for p in self.fault_labels]
        return doc


def retrieve_knowledge(task: TranslationTask, config: PipelineConfig) -> RetrievedKnowledge:
    """Extract the source API sequence and gather all three knowledge kinds.

    An empty source sequence yields an all-empty bundle; augmentation still
    proceeds on conversation history alone.
    """
    api_x = extract_from_program(task.source_code, task.source_lang)
    if not api_x:
        return RetrievedKnowledge((), (), ())
    index = config.load_index()
    hits: list[tuple[SequenceRecord, float]] = []
    if index is not None and len(index) > 0:
        query = config.embedder.embed(api_x.canonical_text)
        for record_id, score in index.query_topk(query, config.k):
            hits.append((index.payload(record_id), score))
    pool = config.load_pool()
    mapping_records: list[ApiMappingRecord] = []
    if pool is not None and len(pool) > 0:
        mapping_records = retrieve_mappings(api_x, pool, config.n, config.embedder)
    return RetrievedKnowledge(
        target_sequences=tuple(hits),
        back_translations=tuple("" for _ in hits),  # filled in by translate()
        api_mappings=tuple(mapping_records),
    )


def _test_candidate(
    task: TranslationTask, code: str | None, config: PipelineConfig, detail: str = ""
) -> TestReport:
    """Run candidate code against the task's metadata; a missing or
    un-harnessable candidate is a failing report, not an error."""
    case_count = len(task.metadata.cases)
    if code is None:
        return all_failed_report(case_count, "compile_error", detail or "no code extracted")
    try:
        return run_candidate(
            task.metadata,
            code,
            task.target_lang,
            timeout=config.timeout,
            toolchains=config.toolchains,
        )
    except ApitransError as exc:
        from .errors import GenerationError

        if isinstance(exc, GenerationError):
            return all_failed_report(case_count, "compile_error", str(exc))
        raise


def _extract_code(response: str, language: Language) -> tuple[str | None, str]:
    try:
        return parse_code_response(response, language), ""
    except EmptyTranslationError as exc:
        return None, str(exc)


def translate(task: TranslationTask, config: PipelineConfig) -> TranslationOutcome:
    """Run the full two-round flow for one task."""
    conversation = Conversation()
    prompt1 = render_prompt1(task)
    conversation.append(prompt1)
    response1 = complete(conversation.messages, config.llm)
    conversation.append(Message("assistant", response1))
    initial_code, problem = _extract_code(response1, task.target_lang)
    initial_report = _test_candidate(task, initial_code, config, problem)

    if initial_report.pass_all:
        return TranslationOutcome(
            task=task,
            stage=STAGE_INITIAL_PASS,
            initial_code=initial_code or "",
            initial_report=initial_report,
            transcript=conversation.messages,
        )

    knowledge = retrieve_knowledge(task, config)
    back_translations: list[str] = []
    for record, _score in knowledge.target_sequences:
        prompt2 = render_prompt2(record.sequence, task.source_lang, task.target_lang)
        conversation.append(prompt2)
        response2 = complete(conversation.messages, config.llm)
        conversation.append(Message("assistant", response2))
        back_translations.append(response2)
    knowledge = replace(knowledge, back_translations=tuple(back_translations))

    messages = render_prompt3(conversation, list(knowledge.api_mappings), task)
    conversation.append(messages[-1])
    response3 = complete(messages, config.llm)
    conversation.append(Message("assistant", response3))
    final_code, problem = _extract_code(response3, task.target_lang)
    final_report = _test_candidate(task, final_code, config, problem)

    stage = STAGE_AUGMENTED_PASS if final_report.pass_all else STAGE_FAILED
    return TranslationOutcome(
        task=task,
        stage=stage,
        initial_code=initial_code or "",
        initial_report=initial_report,
        transcript=conversation.messages,
        knowledge=knowledge,
        final_code=final_code,
        final_report=final_report,
    )


@dataclass(frozen=True)
class BatchSummary:
    """Aggregate view over a batch: CA plus stage/error counts."""

    ca: float
    total: int
    by_stage: dict[str, int]
    errors: tuple[tuple[str, str], ...] = ()

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "ca": self.ca,
            "total": self.total,
            "by_stage": dict(self.by_stage),
            "errors": [{"task_id": t, "error": e} for t, e in self.errors],
        }


def translate_batch(
    tasks: Sequence[TranslationTask],
    config: PipelineConfig,
    parallelism: int = 1,
) -> tuple[list[TranslationOutcome | None], BatchSummary]:
    """Translate every task (parallel up to ``parallelism``) and aggregate CA.

    Per-task environment errors are recorded and the batch continues; the
    result list is aligned with ``tasks`` (None where a task errored).
    """
    if not tasks:
        raise ValidationError("translate_batch requires at least one task")
    if parallelism < 1:
        raise ValidationError("parallelism must be >= 1")
    # resolve file-backed resources once so workers share loaded objects
    config.load_index()
    config.load_pool()

    outcomes: list[TranslationOutcome | None] = [None] * len(tasks)
    errors: list[tuple[str, str]] = []

    def run(i: int) -> None:
        task = tasks[i]
        try:
            outcomes[i] = translate(task, config)
        except ApitransError as exc:
            logger.warning("task %s failed with environment error: %s", task.task_id, exc)
            errors.append((task.task_id, str(exc)))

    if parallelism == 1:
        for i in range(len(tasks)):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            list(pool.map(run, range(len(tasks))))

    completed = [o for o in outcomes if o is not None]
    by_stage = {STAGE_INITIAL_PASS: 0, STAGE_AUGMENTED_PASS: 0, STAGE_FAILED: 0}
    for outcome in completed:
        by_stage[outcome.stage] += 1
    ca = computational_accuracy([o.passed for o in completed]) if completed else 0.0
    summary = BatchSummary(
        ca=ca,
        total=len(tasks),
        by_stage=by_stage,
        errors=tuple(sorted(errors)),
    )
    return outcomes, summary


def write_outcomes(
    outcomes: Sequence[TranslationOutcome | None],
    summary: BatchSummary,
    out_dir: str | Path,
) -> Path:
    """Archive one JSON file per task plus a summary JSON; returns the dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, outcome in enumerate(outcomes):
        if outcome is None:
            continue
        name = outcome.task.task_id or f"task_{i:04d}"
        path = out_dir / f"{name}.json"
        path.write_text(
            json.dumps(outcome.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )
    (out_dir / "summary.json").write_text(
        json.dumps(summary.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )
    return out_dir
