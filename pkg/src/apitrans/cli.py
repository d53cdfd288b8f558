"""Command-line interface.

Subcommands: extract, build-index, build-mappings, review-mappings,
retrieve, translate, eval-ca, eval-retrieval, sweep. Results go to stdout
(or files under --out/--out-dir); logs go to stderr. Exit codes: 0 on
success, 1 on domain failure (failed translation under --strict), 2 on
usage or environment errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence, TextIO

from . import corpus as corpus_mod
from . import evaluate, mappings as mappings_mod, report
from .config import AppConfig, make_chat_provider, make_embedder
from .errors import ApitransError, ConfigurationError
from .extraction import extract_api_sequence, extract_from_program, segment_functions
from .model import Language, TranslationTask, parse_sequence
from .pipeline import PipelineConfig, translate, translate_batch, write_outcomes

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apitrans",
        description="API-knowledge-augmented code translation toolkit",
    )
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--verbose", action="store_true", help="INFO-level logs on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract API sequences from source files")
    p.add_argument("paths", nargs="+", help="source file(s)")
    p.add_argument("--lang", required=True, help="source language (python|java)")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument(
        "--whole-program",
        action="store_true",
        help="one sequence per file instead of one per function",
    )

    p = sub.add_parser("build-index", help="build a target-language sequence index")
    p.add_argument("--manifest", required=True)
    p.add_argument("--lang", help="expected manifest language (checked)")
    p.add_argument("--sample-size", type=int, default=200000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embedder", choices=["mock", "remote"], default="mock")
    p.add_argument("--out", required=True)

    p = sub.add_parser("build-mappings", help="LLM-draft an API mapping pool")
    p.add_argument("--apis", required=True, help="text file, one source API per line")
    p.add_argument("--llm", choices=["scripted", "remote"], required=True)
    p.add_argument("--fixtures", help="scripted responses (JSON)")
    p.add_argument("--source-lang", required=True)
    p.add_argument("--target-lang", required=True)
    p.add_argument("--embedder", choices=["mock", "remote"], default="mock")
    p.add_argument("--out", required=True)

    p = sub.add_parser("review-mappings", help="interactively review a draft pool")
    p.add_argument("--pool", required=True)
    p.add_argument("--out", help="write the reviewed pool here (default: in place)")
    p.add_argument(
        "--allow-draft",
        action="store_true",
        help="permit saving with unreviewed records left over",
    )

    p = sub.add_parser("retrieve", help="retrieve mapping records for a sequence")
    p.add_argument("--pool", required=True)
    p.add_argument("--seq", required=True, help='serialized sequence, e.g. "join/1 -> map/2"')
    p.add_argument("--n", type=int, default=None, help="per-API mapping count")
    p.add_argument("--embedder", choices=["mock", "remote"], default="mock")

    p = sub.add_parser("translate", help="translate one task end to end")
    p.add_argument("--task", required=True, help="task JSON file")
    p.add_argument("--llm", choices=["scripted", "remote"], required=True)
    p.add_argument("--fixtures")
    p.add_argument("--embedder", choices=["mock", "remote"], default="mock")
    p.add_argument("--index")
    p.add_argument("--pool")
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--out", help="directory for the outcome archive")
    p.add_argument("--strict", action="store_true", help="exit 1 if the translation fails")

    p = sub.add_parser("eval-ca", help="CA benchmark over a problem dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--llm", choices=["scripted", "remote"], required=True)
    p.add_argument("--fixtures")
    p.add_argument("--embedder", choices=["mock", "remote"], default="mock")
    p.add_argument("--index")
    p.add_argument("--pool")
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", help="write JSON/TSV/PNG report here")

    p = sub.add_parser("eval-retrieval", help="Precision@1 over sequence pairs")
    p.add_argument("--pairs", required=True, help="JSONL pair file")
    p.add_argument("--embedder", choices=["mock", "remote"], default="mock")
    p.add_argument("--index", help="query this index instead of a golds-only one")
    p.add_argument("--out-dir")

    p = sub.add_parser("sweep", help="CA across k or n values")
    p.add_argument("--dataset", required=True)
    p.add_argument("--axis", choices=["k", "n"], required=True)
    p.add_argument("--values", required=True, help="comma-separated increasing ints")
    p.add_argument("--llm", choices=["scripted", "remote"], required=True)
    p.add_argument("--fixtures")
    p.add_argument("--embedder", choices=["mock", "remote"], default="mock")
    p.add_argument("--index")
    p.add_argument("--pool")
    p.add_argument("--timeout", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir")
    return parser


def _emit(text: str, out: TextIO) -> None:
    out.write(text)
    if not text.endswith("\n"):
        out.write("\n")


def _pipeline_config(args: argparse.Namespace, app: AppConfig) -> PipelineConfig:
    embedder = make_embedder(args.embedder, app)
    llm = make_chat_provider(args.llm, app, fixtures=getattr(args, "fixtures", None))
    index = getattr(args, "index", None) or app.index_path
    pool = getattr(args, "pool", None) or app.pool_path
    return PipelineConfig(
        llm=llm,
        embedder=embedder,
        index=index,
        pool=pool,
        k=getattr(args, "k", None) or app.k,
        n=getattr(args, "n", None) or app.n,
        timeout=getattr(args, "timeout", None) or app.timeout,
        toolchains=app.toolchains,
    )


def cmd_extract(args: argparse.Namespace, app: AppConfig, out: TextIO) -> int:
    language = Language.from_name(args.lang)
    for path in args.paths:
        text = Path(path).read_text(encoding="utf-8")
        if args.whole_program:
            sequences = [extract_from_program(text, language)]
        else:
            snippets = segment_functions(text, language, path=path)
            sequences = [extract_api_sequence(s) for s in snippets]
        for seq in sequences:
            if args.format == "json":
                _emit(json.dumps(seq.to_json_dict()), out)
            else:
                _emit(seq.canonical_text, out)
    return 0


def cmd_build_index(args: argparse.Namespace, app: AppConfig, out: TextIO) -> int:
    manifest = corpus_mod.CorpusManifest.load(args.manifest)
    if args.lang and Language.from_name(args.lang) != manifest.language:
        raise ConfigurationError(
            f"--lang {args.lang} does not match manifest language {manifest.language.value}"
        )
    embedder = make_embedder(args.embedder, app)
    path, stats = corpus_mod.build_corpus(
        manifest, args.sample_size, args.seed, embedder, args.out
    )
    header, records = corpus_mod.load_index_records(path)
    _emit(json.dumps({"index": str(path), "header": header, "stats": stats.to_json_dict()}), out)
    return 0


def cmd_build_mappings(args: argparse.Namespace, app: AppConfig, out: TextIO) -> int:
    api_names = [
        line.strip()
        for line in Path(args.apis).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    deduped = list(dict.fromkeys(api_names))
    llm = make_chat_provider(args.llm, app, fixtures=args.fixtures)
    embedder = make_embedder(args.embedder, app)
    direction = (Language.from_name(args.source_lang), Language.from_name(args.target_lang))
    records, issues = mappings_mod.draft_mappings(deduped, llm, direction, embedder)
    pool = mappings_mod.MappingPool(
        source_lang=direction[0], target_lang=direction[1], records=tuple(records)
    )
    # a freshly drafted pool is all drafts by definition
    pool.save(args.out, allow_draft=True)
    _emit(
        json.dumps(
            {
                "pool": args.out,
                "records": len(records),
                "issues": [{"api": i.api, "problem": i.problem} for i in issues],
            }
        ),
        out,
    )
    return 0


def cmd_review_mappings(args: argparse.Namespace, app: AppConfig, out: TextIO) -> int:
    pool = mappings_mod.MappingPool.load(args.pool)
    reviewed: list[Any] = []
    stdin = sys.stdin
    for record in pool.records:
        if record.review_status == mappings_mod.REVIEWED:
            reviewed.append(record)
            continue
        _emit(f"--- {record.source_api} [{record.review_status}]", out)
        _emit(f"  targets:     {', '.join(record.target_apis) or '(none)'}", out)
        _emit(f"  description: {record.description or '(none)'}", out)
        _emit(f"  caveats:     {record.caveats or '(none)'}", out)
        out.write("approve [a] / revise [r] / skip [s]? ")
        out.flush()
        choice = stdin.readline().strip().lower()
        if choice.startswith("a"):
            reviewed.append(mappings_mod.review(record, mappings_mod.Approve()))
        elif choice.startswith("r"):
            out.write("targets (comma-separated, empty keeps current): ")
            out.flush()
            targets_line = stdin.readline().strip()
            out.write("description (empty keeps current): ")
            out.flush()
            description = stdin.readline().strip()
            out.write("caveats (empty keeps current): ")
            out.flush()
            caveats = stdin.readline().strip()
            revised = mappings_mod.review(
                record,
                mappings_mod.Revise(
                    target_apis=tuple(t.strip() for t in targets_line.split(",") if t.strip())
                    if targets_line
                    else None,
                    description=description or None,
                    caveats=caveats or None,
                ),
            )
            reviewed.append(mappings_mod.review(revised, mappings_mod.Approve()))
        else:
            reviewed.append(record)
    new_pool = mappings_mod.MappingPool(
        source_lang=pool.source_lang, target_lang=pool.target_lang, records=tuple(reviewed)
    )
    new_pool.save(args.out or args.pool, allow_draft=args.allow_draft)
    counts = {
        status: sum(1 for r in reviewed if r.review_status == status)
        for status in ("draft", "revised", "reviewed")
    }
    _emit(json.dumps({"pool": args.out or args.pool, "counts": counts}), out)
    return 0


def cmd_retrieve(args: argparse.Namespace, app: AppConfig, out: TextIO) -> int:
    pool = mappings_mod.MappingPool.load(args.pool)
    seq = parse_sequence(args.seq, pool.source_lang)
    embedder = make_embedder(args.embedder, app)
    records = mappings_mod.retrieve_mappings(seq, pool, args.n or app.n, embedder)
    _emit(json.dumps([r.to_json_dict() for r in records], indent=2), out)
    return 0


def cmd_translate(args: argparse.Namespace, app: AppConfig, out: TextIO) -> int:
    task = TranslationTask.from_json_dict(
        json.loads(Path(args.task).read_text(encoding="utf-8"))
    )
    config = _pipeline_config(args, app)
    outcome = translate(task, config)
    doc = outcome.to_json_dict()
    if args.out:
        write_outcomes([outcome], _single_summary(outcome), args.out)
    _emit(json.dumps(doc, indent=2), out)
    if args.strict and not outcome.passed:
        return 1
    return 0


def _single_summary(outcome: Any) -> Any:
    from .pipeline import BatchSummary

    return BatchSummary(
        ca=1.0 if outcome.passed else 0.0,
        total=1,
        by_stage={outcome.stage: 1},
    )


def cmd_eval_ca(args: argparse.Namespace, app: AppConfig, out: TextIO) -> int:
    config = _pipeline_config(args, app)
    result = evaluate.run_ca_benchmark(args.dataset, config, parallelism=args.jobs)
    _emit(report.ca_table(result), out)
    if args.out_dir:
        report.write_ca_report(result, args.out_dir)
        for direction, outcomes in result.outcomes.items():
            write_outcomes(
                outcomes,
                result.summaries[direction],
                Path(args.out_dir) / direction.replace("->", "_to_"),
            )
    return 0


def cmd_eval_retrieval(args: argparse.Namespace, app: AppConfig, out: TextIO) -> int:
    pairs = evaluate.load_retrieval_pairs(args.pairs)
    embedder = make_embedder(args.embedder, app)
    if args.index:
        index = corpus_mod.load_vector_index(args.index)
        universe = f"index:{args.index}"
    else:
        index = evaluate.build_gold_index(pairs, embedder)
        universe = "golds-only"
    precision = evaluate.precision_at_1(pairs, index, embedder)
    doc = report.write_retrieval_report(precision, len(pairs), universe, args.out_dir)
    _emit(json.dumps(doc, indent=2), out)
    return 0


def cmd_sweep(args: argparse.Namespace, app: AppConfig, out: TextIO) -> int:
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad --values: {args.values!r}") from exc
    config = _pipeline_config(args, app)
    results = evaluate.parameter_sweep(
        args.dataset, args.axis, values, config, parallelism=args.jobs
    )
    _emit(report.sweep_table(results), out)
    if args.out_dir:
        report.write_sweep_report(results, args.out_dir)
    return 0


_COMMANDS = {
    "extract": cmd_extract,
    "build-index": cmd_build_index,
    "build-mappings": cmd_build_mappings,
    "review-mappings": cmd_review_mappings,
    "retrieve": cmd_retrieve,
    "translate": cmd_translate,
    "eval-ca": cmd_eval_ca,
    "eval-retrieval": cmd_eval_retrieval,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        app = AppConfig.load(args.config)
        return _COMMANDS[args.command](args, app, out)
    except ApitransError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
