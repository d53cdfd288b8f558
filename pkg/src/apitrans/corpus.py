"""Offline construction of the target-language API-sequence database.

Pipeline: segment manifest files into snippets, extract sequences, drop
empties, dedup by canonical text, take a seeded uniform sample, embed the
serialized text, persist as JSONL (one header line, one record per line).
Star-ranking and language filtering happen upstream; the manifest is
trusted as given.
"""

from __future__ import annotations

import json
import logging
import os
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .embedding import Embedder, Embedding, VectorIndex
from .errors import CorpusBuildError, EmptyCorpusError, FormatError, ValidationError
from .extraction import ExtractionError, ExtractionStats, extract_api_sequence, segment_functions
from .model import ApiSequence, Language

logger = logging.getLogger(__name__)

INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class CorpusManifest:
    """What to ingest: (source-id, path) pairs plus a provenance note."""

    language: Language
    entries: tuple[tuple[str, str], ...]
    provenance: str = ""

    @classmethod
    def load(cls, path: str | Path) -> "CorpusManifest":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        base = Path(path).parent
        entries = []
        for item in doc["entries"]:
            file_path = Path(item["path"])
            if not file_path.is_absolute():
                file_path = base / file_path
            entries.append((item["source_id"], str(file_path)))
        return cls(
            language=Language.from_name(doc["language"]),
            entries=tuple(entries),
            provenance=doc.get("provenance", ""),
        )


@dataclass(frozen=True)
class SequenceRecord:
    """One row of the vector store: id, target sequence, embedding."""

    id: int
    sequence: ApiSequence
    embedding: Embedding

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "sequence": self.sequence.to_json_dict(),
            "embedding": self.embedding.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "SequenceRecord":
        return cls(
            id=int(doc["id"]),
            sequence=ApiSequence.from_json_dict(doc["sequence"]),
            embedding=Embedding.from_json_dict(doc["embedding"]),
        )


def dedup(sequences: Iterable[ApiSequence]) -> list[ApiSequence]:
    """Keep the first occurrence of each canonical text, order stable."""
    seen: set[str] = set()
    out: list[ApiSequence] = []
    for seq in sequences:
        key = seq.canonical_text
        if key not in seen:
            seen.add(key)
            out.append(seq)
    return out


def extract_manifest_sequences(
    manifest: CorpusManifest,
) -> tuple[list[ApiSequence], ExtractionStats]:
    """Segment and extract every manifest file, skipping broken functions."""
    stats = ExtractionStats()
    sequences: list[ApiSequence] = []
    for source_id, path in manifest.entries:
        stats.files_seen += 1
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            logger.warning("skipping unreadable file %s: %s", path, exc)
            continue
        try:
            snippets = segment_functions(text, manifest.language, source_id=source_id, path=path)
        except ExtractionError as exc:
            logger.warning("skipping unparseable file %s: %s", path, exc)
            continue
        stats.functions_found += len(snippets)
        for snippet in snippets:
            try:
                seq = extract_api_sequence(snippet)
            except ExtractionError as exc:
                logger.warning(
                    "skipping function %s in %s: %s", snippet.origin.function_name, path, exc
                )
                continue
            stats.functions_parsed += 1
            if seq:
                stats.sequences_nonempty += 1
                sequences.append(seq)
    return sequences, stats


def build_corpus(
    manifest: CorpusManifest,
    sample_size: int,
    seed: int,
    embedder: Embedder,
    out_path: str | Path,
) -> tuple[Path, ExtractionStats]:
    """Build and persist the sequence index; returns (path, stats).

    Dedup happens before sampling, so the sample is uniform over unique
    sequences. The write is atomic: records stream to ``<out>.partial``
    and the file is renamed into place only when complete.
    """
    if sample_size < 1:
        raise ValidationError("sample_size must be >= 1")
    if not manifest.entries:
        raise ValidationError("manifest has no entries")

    sequences, stats = extract_manifest_sequences(manifest)
    unique = dedup(sequences)
    if not unique:
        raise EmptyCorpusError("manifest produced zero non-empty API sequences")

    if len(unique) > sample_size:
        rng = random.Random(seed)
        picked = sorted(rng.sample(range(len(unique)), sample_size))
        unique = [unique[i] for i in picked]

    out_path = Path(out_path)
    partial = out_path.with_suffix(out_path.suffix + ".partial")
    out_path.parent.mkdir(parents=True, exist_ok=True)

    header = {
        "format_version": INDEX_FORMAT_VERSION,
        "language": manifest.language.value,
        "dimension": getattr(embedder, "dimension", 0),
        "embed_model_id": embedder.model_id,
        "seed": seed,
        "count": len(unique),
    }
    completed = 0
    with partial.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        try:
            for i, seq in enumerate(unique, start=1):
                emb = embedder.embed(seq.canonical_text)
                if header["dimension"] == 0:
                    header["dimension"] = emb.dimension
                record = SequenceRecord(id=i, sequence=seq, embedding=emb)
                fh.write(json.dumps(record.to_json_dict()) + "\n")
                completed += 1
        except Exception as exc:
            fh.flush()
            raise CorpusBuildError(
                f"embedding failed while building corpus: {exc}",
                completed=completed,
                partial_path=str(partial),
            ) from exc
    if header["dimension"] == 0:
        raise CorpusBuildError("could not establish embedding dimension", completed=0)
    # rewrite header now that dimension is known, then move into place
    _rewrite_header(partial, header)
    os.replace(partial, out_path)
    return out_path, stats


def _rewrite_header(path: Path, header: dict[str, Any]) -> None:
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[0] = json.dumps(header)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_index_records(path: str | Path) -> tuple[dict[str, Any], list[SequenceRecord]]:
    """Read an index file back into (header, records)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"index file {path} is empty")
    header = json.loads(lines[0])
    if header.get("format_version") != INDEX_FORMAT_VERSION:
        raise FormatError(f"unsupported index format_version: {header.get('format_version')}")
    records = [SequenceRecord.from_json_dict(json.loads(line)) for line in lines[1:] if line.strip()]
    if len(records) != header.get("count"):
        raise FormatError(
            f"index {path}: header count {header.get('count')} != {len(records)} records"
        )
    return header, records


def load_vector_index(path: str | Path) -> VectorIndex:
    """Load an index file into an in-memory exact-search index."""
    header, records = load_index_records(path)
    index = VectorIndex(dimension=header["dimension"], language=header["language"])
    for record in records:
        index.add(record.id, record.embedding, payload=record)
    return index
