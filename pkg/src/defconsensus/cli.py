"""Command-line entry point wiring ingestion - embedding - similarity -
consensus - reports.

Subcommands mirror the pipeline stages: ingest-check, embed, analyze,
compare, evaluate, generate.  Every run writes its artifacts plus a
manifest into a per-run directory (timestamp + input content hash) so
reruns never overwrite earlier outputs.

Exit codes: 0 success, 1 pipeline error, 2 argument error.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
from pathlib import Path

from . import consensus, corpus as corpus_mod, embedding, generation, similarity
from .errors import DefConsensusError

EXIT_OK = 0
EXIT_PIPELINE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _require_file(path_str: str, what: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        raise UsageError(f"{what} file not found: {path}")
    return path


def _run_dir(base: str | None, input_hashes: dict[str, str]) -> Path:
    if base:
        out = Path(base)
    else:
        digest = hashlib.sha256(
            "".join(sorted(input_hashes.values())).encode()
        ).hexdigest()[:8]
        stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%dT%H%M%S")
        out = Path("runs") / f"{stamp}-{digest}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(
    out_dir: Path,
    command: str,
    config_snapshot: dict,
    input_hashes: dict[str, str],
    output_paths: list[Path],
    started: str,
) -> None:
    for path in output_paths:
        if not path.exists():
            raise DefConsensusError(f"declared output missing: {path}")
    manifest = {
        "command": command,
        "config": config_snapshot,
        "input_hashes": input_hashes,
        "outputs": [str(p) for p in output_paths],
        "started": started,
        "finished": _utcnow(),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


def _provider_config(args) -> embedding.ProviderConfig:
    if getattr(args, "embeddings", None):
        path = _require_file(args.embeddings, "embeddings")
        return embedding.ProviderConfig(kind="file", path=str(path))
    if getattr(args, "endpoint", None):
        return embedding.ProviderConfig(
            kind="remote", endpoint=args.endpoint, model_id=args.model_id
        )
    return embedding.ProviderConfig(kind="local_deterministic", dim=args.dim)


def _add_provider_flags(parser):
    parser.add_argument(
        "--embeddings", help="precomputed embeddings JSON (file provider)"
    )
    parser.add_argument("--endpoint", help="remote embedding service URL")
    parser.add_argument(
        "--model-id", default="all-mpnet-base-v2", help="remote model id"
    )
    parser.add_argument(
        "--dim", type=int, default=embedding.DEFAULT_LOCAL_DIM,
        help="dimension of the local deterministic embedder",
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest_check(args) -> int:
    for path_str in args.corpora:
        path = _require_file(path_str, "corpus")
        c = corpus_mod.load_corpus(path)
        kinds: dict[str, int] = {}
        for d in c:
            kinds[d.kind] = kinds.get(d.kind, 0) + 1
        print(f"{path}: {len(c)} definitions ({', '.join(f'{v} {k}' for k, v in kinds.items())})")
    return EXIT_OK


def cmd_embed(args) -> int:
    started = _utcnow()
    path = _require_file(args.corpus, "corpus")
    config = _provider_config(args)
    c = corpus_mod.load_corpus(path)
    embedding_set = embedding.embed_corpus(c, config)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    embedding.save_embeddings(embedding_set, out)
    print(f"wrote {len(embedding_set)} vectors (dim {embedding_set.dim}) to {out}")
    manifest_dir = out.parent
    _write_manifest(
        manifest_dir,
        "embed",
        {"provider": config.kind, "model_id": embedding_set.model_id, "dim": embedding_set.dim},
        {str(path): _file_hash(path)},
        [out],
        started,
    )
    return EXIT_OK


def cmd_analyze(args) -> int:
    started = _utcnow()
    cand_path = _require_file(args.candidates, "candidates")
    ref_path = _require_file(args.references, "references")
    config = _provider_config(args)
    candidates = corpus_mod.load_corpus(cand_path)
    references = corpus_mod.load_corpus(ref_path)
    cand_set = embedding.embed_corpus(candidates, config)
    ref_set = embedding.embed_corpus(references, config)
    m = similarity.matrix(cand_set, ref_set)
    report = consensus.rank(
        m,
        exclude_self=not args.include_self,
        reference_corpus=str(ref_path),
    )

    input_hashes = {
        str(cand_path): _file_hash(cand_path),
        str(ref_path): _file_hash(ref_path),
    }
    out_dir = _run_dir(args.out_dir, input_hashes)
    outputs = {
        "matrix.csv": similarity.to_csv(m),
        "matrix.json": similarity.to_json(m) + "\n",
        "report.json": consensus.report_to_json(report) + "\n",
        "report.md": consensus.report_to_markdown(report),
    }
    paths = []
    for name, content in outputs.items():
        p = out_dir / name
        p.write_text(content, encoding="utf-8", newline="\n")
        paths.append(p)
    _write_manifest(
        out_dir,
        "analyze",
        {
            "provider": config.kind,
            "model_id": m.model_id,
            "exclude_self": not args.include_self,
        },
        input_hashes,
        paths,
        started,
    )
    best = report.rows[0]
    print(f"rank 1: {best.candidate_id} (average {best.average_score:.3f})")
    print(f"outputs in {out_dir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    started = _utcnow()
    ids = [i.strip() for i in args.ids.split(",") if i.strip()]
    if len(ids) < 2:
        raise UsageError("compare needs at least 2 ids")
    input_hashes = {}
    if args.embeddings:
        emb_path = _require_file(args.embeddings, "embeddings")
        input_hashes[str(emb_path)] = _file_hash(emb_path)
        embedding_set = embedding.load_embeddings_file(emb_path)
    else:
        if not args.corpus:
            raise UsageError("compare needs --embeddings or --corpus")
        config = _provider_config(args)
        path = _require_file(args.corpus, "corpus")
        input_hashes[str(path)] = _file_hash(path)
        embedding_set = embedding.embed_corpus(corpus_mod.load_corpus(path), config)
    m = consensus.pairwise_table(ids, embedding_set)

    out_dir = _run_dir(args.out_dir, input_hashes)
    outputs = {
        "pairwise.csv": similarity.to_csv(m),
        "pairwise.json": similarity.to_json(m) + "\n",
        "pairwise.md": consensus.pairwise_to_markdown(m),
    }
    paths = []
    for name, content in outputs.items():
        p = out_dir / name
        p.write_text(content, encoding="utf-8", newline="\n")
        paths.append(p)
    _write_manifest(
        out_dir, "compare", {"ids": ids, "model_id": m.model_id},
        input_hashes, paths, started,
    )
    print(consensus.pairwise_to_markdown(m))
    print(f"outputs in {out_dir}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    started = _utcnow()
    cand_path = _require_file(args.candidates, "candidates")
    ref_path = _require_file(args.references, "references")
    config = _provider_config(args)
    candidates = corpus_mod.load_corpus(cand_path)
    references = corpus_mod.load_corpus(ref_path)
    anchors = [a.strip() for a in (args.anchors or "").split(",") if a.strip()]

    results = []
    for d in candidates:
        result = consensus.evaluate_new(
            d, references, anchors=anchors, config=config, threshold=args.threshold
        )
        results.append(result)
        verdict = "admitted" if result.admitted else "rejected"
        print(f"{d.id}: average {result.vs_corpus_average:.3f} -> {verdict}")

    input_hashes = {
        str(cand_path): _file_hash(cand_path),
        str(ref_path): _file_hash(ref_path),
    }
    out_dir = _run_dir(args.out_dir, input_hashes)
    payload = "[\n" + ",\n".join(
        consensus.evaluation_to_json(r) for r in results
    ) + "\n]\n"
    eval_path = out_dir / "evaluation.json"
    eval_path.write_text(payload, encoding="utf-8", newline="\n")
    _write_manifest(
        out_dir,
        "evaluate",
        {"provider": config.kind, "threshold": args.threshold, "anchors": anchors},
        input_hashes,
        [eval_path],
        started,
    )
    print(f"outputs in {out_dir}")
    return EXIT_OK


def cmd_generate(args) -> int:
    started = _utcnow()
    path = _require_file(args.corpus, "corpus")
    if args.n < 1:
        raise UsageError("-n must be >= 1")
    if not args.mock and not args.endpoint:
        raise UsageError("generate needs --mock or --endpoint")
    config = generation.GenerationConfig(
        endpoint="" if args.mock else args.endpoint,
        model_id=args.model_id,
        temperature=args.temperature,
        n_definitions=args.n,
        seed=args.seed,
    )
    source = corpus_mod.load_corpus(path)
    result = generation.generate_composites(source, config)

    input_hashes = {str(path): _file_hash(path)}
    out_dir = _run_dir(args.out_dir, input_hashes)
    corpus_path = out_dir / "generated.jsonl"
    corpus_mod.save_corpus(result.corpus, corpus_path)
    sidecar_path = out_dir / "provenance.jsonl"
    with open(sidecar_path, "w", encoding="utf-8", newline="\n") as fh:
        for record in result.provenance:
            fh.write(
                json.dumps(
                    {
                        "definition_id": record.definition_id,
                        "prompt": record.prompt,
                        "model_id": record.model_id,
                        "temperature": record.temperature,
                        "timestamp": record.timestamp,
                        "over_word_limit": record.over_word_limit,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    _write_manifest(
        out_dir,
        "generate",
        {
            "mock": config.use_mock,
            "model_id": config.model_id,
            "temperature": config.temperature,
            "n": config.n_definitions,
            "seed": config.seed,
        },
        input_hashes,
        [corpus_path, sidecar_path],
        started,
    )
    print(f"generated {len(result.corpus)} definitions in {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="defconsensus",
        description="Consensus analysis of definition corpora via embedding similarity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="parse corpora and report counts")
    p.add_argument("corpora", nargs="+", help="corpus jsonl files")
    p.set_defaults(func=cmd_ingest_check)

    p = sub.add_parser("embed", help="embed a corpus and save vectors")
    p.add_argument("--corpus", required=True)
    p.add_argument("-o", "--output", required=True, help="embeddings JSON output path")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("analyze", help="rank candidates by average similarity")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--include-self", action="store_true",
                   help="keep a candidate's own column in its average")
    p.add_argument("--out-dir")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="pairwise similarity table for given ids")
    p.add_argument("--ids", required=True, help="comma-separated definition ids")
    p.add_argument("--corpus", help="corpus to embed when no --embeddings given")
    p.add_argument("--out-dir")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("evaluate", help="evaluate new definitions against a corpus")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--threshold", type=float,
                   default=consensus.DEFAULT_ADMISSION_THRESHOLD)
    p.add_argument("--anchors", help="comma-separated anchor ids")
    p.add_argument("--out-dir")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate", help="generate composite definitions")
    p.add_argument("--corpus", required=True)
    p.add_argument("-n", type=int, default=20)
    p.add_argument("--mock", action="store_true", help="use the deterministic mock")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--endpoint", help="chat-completion service URL")
    p.add_argument("--model-id", default="gpt-4")
    p.add_argument("--temperature", type=float, default=0.7)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DefConsensusError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_PIPELINE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
