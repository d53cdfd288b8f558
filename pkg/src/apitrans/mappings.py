"""The curated single-API mapping pool: schema, drafting, review, retrieval.

A record maps one source-language API to its target-language equivalents
with a functional description and usage caveats. Drafting is LLM-assisted
but records only become retrievable after a human review pass; the pool
file is the state machine's persistence.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from .embedding import Embedder, Embedding, VectorIndex
from .errors import FormatError, ValidationError
from .model import ApiSequence, Language

logger = logging.getLogger(__name__)

POOL_FORMAT_VERSION = 1

DRAFT = "draft"
REVIEWED = "reviewed"
REVISED = "revised"
_STATUSES = (DRAFT, REVIEWED, REVISED)


def _normalize_api(name: str) -> str:
    return re.sub(r"\s+", "", name)


@dataclass(frozen=True)
class ApiMappingRecord:
    """One X->Y mapping: source API, targets, description, caveats."""

    id: int
    source_api: str
    source_embedding: Embedding
    target_apis: tuple[str, ...]
    description: str
    caveats: str
    review_status: str = DRAFT

    def __post_init__(self) -> None:
        if self.review_status not in _STATUSES:
            raise ValidationError(f"bad review status: {self.review_status!r}")
        if not self.source_api.strip():
            raise ValidationError("source_api must be non-empty")
        if self.review_status == REVIEWED:
            self._require_complete()

    def _require_complete(self) -> None:
        if not self.target_apis or not all(t.strip() for t in self.target_apis):
            raise ValidationError(f"record {self.source_api!r}: target_apis must be non-empty")
        if not self.description.strip():
            raise ValidationError(f"record {self.source_api!r}: description must be non-empty")
        if not self.caveats.strip():
            raise ValidationError(f"record {self.source_api!r}: caveats must be non-empty")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "source_api": self.source_api,
            "source_embedding": self.source_embedding.to_json_dict(),
            "target_apis": list(self.target_apis),
            "description": self.description,
            "caveats": self.caveats,
            "review_status": self.review_status,
        }

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "ApiMappingRecord":
        return cls(
            id=int(doc["id"]),
            source_api=doc["source_api"],
            source_embedding=Embedding.from_json_dict(doc["source_embedding"]),
            target_apis=tuple(doc["target_apis"]),
            description=doc["description"],
            caveats=doc["caveats"],
            review_status=doc["review_status"],
        )


@dataclass(frozen=True)
class MappingPool:
    """All mapping records for one translation direction."""

    source_lang: Language
    target_lang: Language
    records: tuple[ApiMappingRecord, ...]

    def __post_init__(self) -> None:
        seen: dict[str, int] = {}
        dims = set()
        for record in self.records:
            key = _normalize_api(record.source_api)
            if key in seen:
                raise ValidationError(
                    f"duplicate source_api {record.source_api!r} (ids {seen[key]}, {record.id})"
                )
            seen[key] = record.id
            dims.add(record.source_embedding.dimension)
        if len(dims) > 1:
            raise ValidationError(f"pool embeddings disagree on dimension: {sorted(dims)}")

    @property
    def dimension(self) -> int:
        return self.records[0].source_embedding.dimension if self.records else 0

    def __len__(self) -> int:
        return len(self.records)

    def save(self, path: str | Path, allow_draft: bool = False) -> Path:
        """Persist as JSONL with an atomic replace.

        Only reviewed records are accepted unless ``allow_draft`` is set.
        """
        if not allow_draft:
            pending = [r.source_api for r in self.records if r.review_status != REVIEWED]
            if pending:
                raise ValidationError(
                    f"pool contains unreviewed records: {', '.join(sorted(pending))} "
                    "(pass allow_draft to persist anyway)"
                )
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = {
            "format_version": POOL_FORMAT_VERSION,
            "source_lang": self.source_lang.value,
            "target_lang": self.target_lang.value,
            "dimension": self.dimension,
            "count": len(self.records),
        }
        tmp = path.with_suffix(path.suffix + ".tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps(header) + "\n")
            for record in self.records:
                fh.write(json.dumps(record.to_json_dict()) + "\n")
        os.replace(tmp, path)
        return path

    @classmethod
    def load(cls, path: str | Path) -> "MappingPool":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise FormatError(f"pool file {path} is empty")
        header = json.loads(lines[0])
        if header.get("format_version") != POOL_FORMAT_VERSION:
            raise FormatError(f"unsupported pool format_version: {header.get('format_version')}")
        records = tuple(
            ApiMappingRecord.from_json_dict(json.loads(line)) for line in lines[1:] if line.strip()
        )
        if len(records) != header.get("count"):
            raise FormatError(
                f"pool {path}: header count {header.get('count')} != {len(records)} records"
            )
        return cls(
            source_lang=Language.from_name(header["source_lang"]),
            target_lang=Language.from_name(header["target_lang"]),
            records=records,
        )

    def to_index(self) -> VectorIndex:
        index = VectorIndex(dimension=self.dimension)
        for record in self.records:
            index.add(record.id, record.source_embedding, payload=record)
        return index


# --- drafting ----------------------------------------------------------------

_DRAFT_PROMPT = (
    "You are documenting cross-language API equivalences.\n"
    "For the {source} API `{api}`, name the closest {target} equivalent(s) and "
    "describe them. Answer in exactly this form:\n"
    "Target: <comma-separated {target} APIs>\n"
    "Description: <one sentence on what the API does>\n"
    "Caveats: <usage limitations and behavioural discrepancies>"
)

_FIELD_RE = re.compile(r"^(Target|Description|Caveats):\s*(.*)$", re.IGNORECASE)


@dataclass(frozen=True)
class DraftIssue:
    api: str
    problem: str


def draft_mappings(
    api_names: Sequence[str],
    llm: Any,
    direction: tuple[Language, Language],
    embedder: Embedder,
) -> tuple[list[ApiMappingRecord], list[DraftIssue]]:
    """LLM-draft one record per API name; malformed responses are flagged.

    Every input yields a draft record (possibly incomplete); issues report
    what was missing so the review pass can repair it.
    """
    from .llm import Message, complete

    source_lang, target_lang = direction
    records: list[ApiMappingRecord] = []
    issues: list[DraftIssue] = []
    for i, api in enumerate(api_names, start=1):
        prompt = _DRAFT_PROMPT.format(
            source=source_lang.display_name, target=target_lang.display_name, api=api
        )
        try:
            response = complete([Message("user", prompt)], llm)
        except Exception as exc:  # provider failure: report and keep going
            issues.append(DraftIssue(api=api, problem=f"llm failure: {exc}"))
            continue
        fields = {"target": "", "description": "", "caveats": ""}
        for line in response.splitlines():
            m = _FIELD_RE.match(line.strip())
            if m:
                fields[m.group(1).lower()] = m.group(2).strip()
        targets = tuple(t.strip() for t in fields["target"].split(",") if t.strip())
        missing = [name for name in ("target", "description", "caveats") if not fields[name]]
        if not targets and "target" not in missing:
            missing.insert(0, "target")
        if missing:
            issues.append(
                DraftIssue(api=api, problem=f"response missing field(s): {', '.join(missing)}")
            )
        records.append(
            ApiMappingRecord(
                id=i,
                source_api=api,
                source_embedding=embedder.embed(api),
                target_apis=targets,
                description=fields["description"],
                caveats=fields["caveats"],
                review_status=DRAFT,
            )
        )
    return records, issues


# --- review ------------------------------------------------------------------

@dataclass(frozen=True)
class Approve:
    pass


@dataclass(frozen=True)
class Revise:
    target_apis: tuple[str, ...] | None = None
    description: str | None = None
    caveats: str | None = None


def review(record: ApiMappingRecord, verdict: Approve | Revise) -> ApiMappingRecord:
    """Advance a record through draft -> (revised ->) reviewed."""
    if record.review_status == REVIEWED:
        raise ValidationError(f"record {record.source_api!r} is already reviewed")
    if isinstance(verdict, Revise):
        updates: dict[str, Any] = {"review_status": REVISED}
        if verdict.target_apis is not None:
            updates["target_apis"] = tuple(verdict.target_apis)
        if verdict.description is not None:
            updates["description"] = verdict.description
        if verdict.caveats is not None:
            updates["caveats"] = verdict.caveats
        return replace(record, **updates)
    if not record.target_apis:
        raise ValidationError(
            f"cannot approve {record.source_api!r}: target_apis is empty"
        )
    return replace(record, review_status=REVIEWED)


# --- retrieval ---------------------------------------------------------------

def unique(records: Iterable[ApiMappingRecord]) -> list[ApiMappingRecord]:
    """Drop duplicate records by id, first occurrence kept, order stable."""
    seen: set[int] = set()
    out = []
    for record in records:
        if record.id not in seen:
            seen.add(record.id)
            out.append(record)
    return out


def retrieve_mapping_candidates(
    api_x: ApiSequence,
    pool: MappingPool,
    n: int,
    embedder: Embedder,
    pool_index: VectorIndex | None = None,
) -> list[ApiMappingRecord]:
    """Top-n pool records per call of ``api_x``, concatenated in call order.

    This is the pre-dedup candidate list; callers normally want
    :func:`retrieve_mappings`, which applies ``unique`` on top.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not len(pool):
        raise ValidationError("mapping pool is empty")
    if not api_x:
        return []
    index = pool_index if pool_index is not None else pool.to_index()
    out: list[ApiMappingRecord] = []
    for call in api_x.calls:
        query = embedder.embed(call.qualified_name)
        for record_id, _score in index.query_topk(query, n):
            out.append(index.payload(record_id))
    return out


def retrieve_mappings(
    api_x: ApiSequence,
    pool: MappingPool,
    n: int,
    embedder: Embedder,
    pool_index: VectorIndex | None = None,
) -> list[ApiMappingRecord]:
    """Per-call top-n retrieval over the pool followed by ``unique``."""
    return unique(retrieve_mapping_candidates(api_x, pool, n, embedder, pool_index=pool_index))
