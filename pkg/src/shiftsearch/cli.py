"""Command-line interface.

Subcommands: index build, index inspect, search, serve, gen corpus,
eval run, eval kappa, eval fuse, stats. The global --json flag switches every
subcommand to JSON-lines output. Exit status 0 on success, 1 on errors, 2 on
usage mistakes.
"""

from __future__ import annotations

import argparse
import json
import sys
from itertools import combinations
from pathlib import Path

from .corpus import (
    CorpusError,
    corpus_stats,
    generate_synthetic_corpus,
    load_corpus,
    load_dictionary,
    save_corpus,
    save_dictionary,
)
from .embedding import FileVectorProvider, HashedNgramProvider, provider_from_spec
from .evaluation import (
    LEVELS,
    QrelSet,
    cohens_kappa,
    dedup_events,
    evaluate_run,
    fuse_votes,
    load_feedback_log,
    load_qrels,
    load_run,
    write_qrels,
)
from .index import IndexConfig, SearchIndexError, build_index, load_index, save_index
from .preprocess import load_lemma_table, load_stopwords
from .search import METHODS, EmptyQueryError, SearchConfig, run_search
from .service import ServiceConfig, ServiceConfigError, load_service_config, serve


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, ensure_ascii=False))
    else:
        print(human)


def _index_config_from_args(args) -> IndexConfig:
    stopwords = None
    if args.stopwords:
        stopwords = tuple(sorted(load_stopwords(args.stopwords)))
    lemma: tuple = ()
    if args.lemma:
        lemma = tuple(sorted(load_lemma_table(args.lemma).items()))
    return IndexConfig(
        expand_documents=not args.no_expand,
        stopwords=stopwords,
        lemma=lemma,
    )


def _provider_from_args(args):
    if getattr(args, "vectors", None):
        return FileVectorProvider(args.vectors, args.fallback_seed)
    return HashedNgramProvider(seed=args.seed, dim=args.dim)


def _cmd_index_build(args) -> int:
    records = load_corpus(args.records, args.format)
    dictionary = load_dictionary(args.dictionary) if args.dictionary else []
    provider = _provider_from_args(args)
    config = _index_config_from_args(args)
    index = build_index(records, dictionary, provider, config)
    save_index(index, args.out)
    _emit(
        args,
        {
            "out": str(args.out),
            "doc_count": index.doc_count,
            "dim": index.dim,
            "terms": len(index.postings),
            "fingerprint": index.provider_fingerprint,
        },
        f"indexed {index.doc_count} records ({len(index.postings)} terms, "
        f"dim {index.dim}) into {args.out}",
    )
    return 0


def _cmd_index_inspect(args) -> int:
    index = load_index(args.index)
    payload = {
        "doc_count": index.doc_count,
        "dim": index.dim,
        "terms": len(index.postings),
        "provider_fingerprint": index.provider_fingerprint,
        "provider": index.provider_spec,
        "config": index.config.as_dict(),
        "config_hash": index.config.config_hash(),
        "dictionary_entries": len(index.dictionary),
    }
    human = "\n".join(
        [
            f"doc_count            {index.doc_count}",
            f"dim                  {index.dim}",
            f"terms                {len(index.postings)}",
            f"dictionary entries   {len(index.dictionary)}",
            f"provider             {index.provider_spec.get('type', '?')}",
            f"provider fingerprint {index.provider_fingerprint}",
            f"config hash          {index.config.config_hash()}",
            f"expand_documents     {index.config.expand_documents}",
        ]
    )
    _emit(args, payload, human)
    return 0


def _cmd_search(args) -> int:
    index = load_index(args.index)
    provider = provider_from_spec(index.provider_spec)
    config = SearchConfig(
        k=args.k,
        page_size=args.limit,
        query_expansion=args.expansion == "on",
        method=args.method,
    )
    results = run_search(index, provider, args.q, config)
    if args.sort == "time":
        results = sorted(
            results, key=lambda r: (-index.timestamps[r.record_id], r.record_id)
        )
    if args.json:
        for result in results:
            record = index.record(result.record_id)
            print(json.dumps({
                "rank": result.rank,
                "record_id": result.record_id,
                "score": result.score,
                "doc_sim": result.doc_sim,
                "term_sim": result.term_sim,
                "timestamp": record.timestamp,
                "title": record.title,
            }, ensure_ascii=False))
        return 0
    if not results:
        print("no results")
        return 0
    print(f"{'rank':>4}  {'score':>7}  {'record':<12} {'timestamp':>11}  title")
    for result in results:
        record = index.record(result.record_id)
        print(
            f"{result.rank:>4}  {result.score:>7.4f}  {result.record_id:<12} "
            f"{record.timestamp:>11}  {record.title}"
        )
    return 0


def _cmd_serve(args) -> int:
    if args.config:
        config = load_service_config(args.config)
    else:
        if not args.index:
            print("error: serve needs --config or --index", file=sys.stderr)
            return 1
        config = ServiceConfig(index_dir=args.index)
    overrides = {}
    if args.index:
        overrides["index_dir"] = args.index
    if args.port is not None:
        overrides["port"] = args.port
    if args.host:
        overrides["host"] = args.host
    if args.feedback_log:
        overrides["feedback_log"] = args.feedback_log
    if args.plan:
        overrides["plan_path"] = args.plan
    if args.static:
        overrides["static_dir"] = args.static
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    serve(config)
    return 0


def _cmd_gen_corpus(args) -> int:
    bench = generate_synthetic_corpus(
        args.seed, args.records, args.locations, args.queries
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(bench.records, out / "records.jsonl", "json-lines")
    save_dictionary(bench.dictionary, out / "dictionary.tsv")
    query_lines = ["query_id\ttext"] + [f"{qid}\t{text}" for qid, text in bench.queries]
    (out / "queries.tsv").write_text("\n".join(query_lines) + "\n", encoding="utf-8")
    write_qrels(QrelSet(grades=dict(bench.truth)), out / "qrels.txt")
    _emit(
        args,
        {
            "out": str(out),
            "records": len(bench.records),
            "locations": len(bench.dictionary),
            "queries": len(bench.queries),
            "graded_pairs": len(bench.truth),
        },
        f"wrote {len(bench.records)} records, {len(bench.dictionary)} locations, "
        f"{len(bench.queries)} queries, {len(bench.truth)} graded pairs to {out}",
    )
    return 0


def _cmd_eval_run(args) -> int:
    run = load_run(args.run)
    qrels = load_qrels(args.qrels)
    cutoffs = tuple(int(x) for x in args.cutoffs.split(","))
    report = evaluate_run(run, qrels, cutoffs)
    if args.json:
        print(json.dumps(report.as_dict(), ensure_ascii=False))
        return 0
    print(f"run {report.tag}: {report.query_count} queries "
          f"({report.unjudged_queries} unjudged), avg retrieved {report.avg_retrieved:.1f}")
    print(f"MRR      {report.mrr:.4f}")
    for n in report.cutoffs:
        print(f"P@{n:<6} {report.precision[n]:.4f}")
    for n in report.cutoffs:
        print(f"mAP@{n:<4} {report.mean_ap[n]:.4f}")
    for n in report.cutoffs:
        print(f"nDCG@{n:<3} {report.ndcg[n]:.4f}")
    return 0


def _cmd_eval_kappa(args) -> int:
    events = dedup_events(load_feedback_log(args.feedback))
    levels = LEVELS if args.level == "both" else (args.level,)
    by_assessor: dict[tuple[str, str], dict[tuple[str, str], bool]] = {}
    for event in events:
        if event.level not in levels:
            continue
        key = (event.assessor_id, event.level)
        by_assessor.setdefault(key, {})[(event.query_id, event.record_id)] = event.relevant
    rows = []
    for level in levels:
        assessors = sorted(a for a, lv in by_assessor if lv == level)
        for a, b in combinations(assessors, 2):
            judgments_a = by_assessor[(a, level)]
            judgments_b = by_assessor[(b, level)]
            shared = sorted(set(judgments_a) & set(judgments_b))
            if not shared:
                continue
            kappa = cohens_kappa(
                [judgments_a[key] for key in shared],
                [judgments_b[key] for key in shared],
            )
            rows.append({"level": level, "assessor_a": a, "assessor_b": b,
                         "pairs": len(shared), "kappa": kappa})
    if args.json:
        for row in rows:
            print(json.dumps(row, ensure_ascii=False))
        return 0
    if not rows:
        print("no overlapping judgments")
        return 0
    for row in rows:
        print(f"{row['level']:<7} {row['assessor_a']} vs {row['assessor_b']}: "
              f"kappa={row['kappa']:.4f} over {row['pairs']} shared judgments")
    mean = sum(r["kappa"] for r in rows) / len(rows)
    print(f"mean kappa {mean:.4f} over {len(rows)} pairs")
    return 0


def _cmd_eval_fuse(args) -> int:
    events = load_feedback_log(args.feedback)
    qrels = fuse_votes(events)
    write_qrels(qrels, args.out)
    _emit(
        args,
        {"out": str(args.out), "pairs": len(qrels.grades)},
        f"wrote {len(qrels.grades)} graded pairs to {args.out}",
    )
    return 0


def _cmd_stats(args) -> int:
    records = load_corpus(args.records, args.format)
    stats = corpus_stats(records, args.bucket_width)
    payload = {
        "record_count": stats.record_count,
        "bucket_width": stats.bucket_width,
        "length_histogram": {str(k): v for k, v in stats.length_histogram.items()},
        "token_kind_shares": stats.token_kind_shares.as_dict(),
    }
    if args.json:
        print(json.dumps(payload, ensure_ascii=False))
        return 0
    print(f"records: {stats.record_count}")
    shares = stats.token_kind_shares
    print(f"token kinds: word={shares.word:.3f} code={shares.code:.3f} "
          f"numeric={shares.numeric:.3f}")
    for bucket, count in stats.length_histogram.items():
        print(f"  {bucket:>6}-{bucket + stats.bucket_width - 1:<6} {count}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shiftsearch",
        description="Semantic search over plant-log records plus evaluation tools.",
    )
    parser.add_argument("--json", action="store_true", help="machine-readable JSON-lines output")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build or inspect an index")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)

    p_build = index_sub.add_parser("build", help="build an index directory")
    p_build.add_argument("--records", required=True)
    p_build.add_argument("--format", default="json-lines",
                         choices=["json-lines", "jsonl", "delimited-table", "tsv"])
    p_build.add_argument("--dictionary")
    p_build.add_argument("--out", required=True)
    p_build.add_argument("--dim", type=int, default=128)
    p_build.add_argument("--seed", type=int, default=13)
    p_build.add_argument("--vectors", help="word-vector text file instead of hashed vectors")
    p_build.add_argument("--fallback-seed", type=int, default=13)
    p_build.add_argument("--no-expand", action="store_true",
                         help="skip document-side context expansion")
    p_build.add_argument("--stopwords", help="stopword file, one term per line")
    p_build.add_argument("--lemma", help="two-column lemma table file")
    p_build.set_defaults(func=_cmd_index_build)

    p_inspect = index_sub.add_parser("inspect", help="show index metadata")
    p_inspect.add_argument("--index", required=True)
    p_inspect.set_defaults(func=_cmd_index_inspect)

    p_search = sub.add_parser("search", help="query an index")
    p_search.add_argument("--index", required=True)
    p_search.add_argument("--q", required=True)
    p_search.add_argument("--method", default="semantic", choices=list(METHODS))
    p_search.add_argument("--limit", type=int, default=20)
    p_search.add_argument("--k", type=int, default=200)
    p_search.add_argument("--expansion", default="on", choices=["on", "off"])
    p_search.add_argument("--sort", default="relevance", choices=["relevance", "time"])
    p_search.set_defaults(func=_cmd_search)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config")
    p_serve.add_argument("--index")
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--feedback-log")
    p_serve.add_argument("--plan")
    p_serve.add_argument("--static")
    p_serve.set_defaults(func=_cmd_serve)

    p_gen = sub.add_parser("gen", help="generate synthetic data")
    gen_sub = p_gen.add_subparsers(dest="gen_command", required=True)
    p_gen_corpus = gen_sub.add_parser("corpus", help="generate a benchmark corpus")
    p_gen_corpus.add_argument("--seed", type=int, required=True)
    p_gen_corpus.add_argument("--records", type=int, required=True)
    p_gen_corpus.add_argument("--locations", type=int, required=True)
    p_gen_corpus.add_argument("--queries", type=int, default=None)
    p_gen_corpus.add_argument("--out", required=True)
    p_gen_corpus.set_defaults(func=_cmd_gen_corpus)

    p_eval = sub.add_parser("eval", help="evaluation tools")
    eval_sub = p_eval.add_subparsers(dest="eval_command", required=True)

    p_eval_run = eval_sub.add_parser("run", help="score a run file against qrels")
    p_eval_run.add_argument("--run", required=True)
    p_eval_run.add_argument("--qrels", required=True)
    p_eval_run.add_argument("--cutoffs", default="5,20")
    p_eval_run.set_defaults(func=_cmd_eval_run)

    p_eval_kappa = eval_sub.add_parser("kappa", help="pairwise Cohen's kappa from a feedback log")
    p_eval_kappa.add_argument("--feedback", required=True)
    p_eval_kappa.add_argument("--level", default="both", choices=["term", "phrase", "both"])
    p_eval_kappa.set_defaults(func=_cmd_eval_kappa)

    p_eval_fuse = eval_sub.add_parser("fuse", help="fuse a feedback log into graded qrels")
    p_eval_fuse.add_argument("--feedback", required=True)
    p_eval_fuse.add_argument("--out", required=True)
    p_eval_fuse.set_defaults(func=_cmd_eval_fuse)

    p_stats = sub.add_parser("stats", help="profile a record collection")
    p_stats.add_argument("--records", required=True)
    p_stats.add_argument("--format", default="json-lines",
                         choices=["json-lines", "jsonl", "delimited-table", "tsv"])
    p_stats.add_argument("--bucket-width", type=int, default=100)
    p_stats.set_defaults(func=_cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, SearchIndexError, EmptyQueryError, ServiceConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
