"""Generate a synthetic benchmark and compare the three ranking methods.

Runs semantic, bm25 and keyword search over the generated query set, scores
each run against the generated relevance grades, and prints a comparison
table. With --out, also writes the run files, the qrels and a JSON report.

Usage:
    python3 scripts/run_benchmark.py --seed 7 --records 500 --locations 25
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from shiftsearch.benchmark import (  # noqa: E402
    DEFAULT_DIM,
    DEFAULT_EMBED_SEED,
    build_benchmark_index,
    evaluate_benchmark,
)
from shiftsearch.corpus import generate_synthetic_corpus  # noqa: E402
from shiftsearch.embedding import HashedNgramProvider  # noqa: E402
from shiftsearch.evaluation import write_qrels, write_run  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--records", type=int, default=500)
    parser.add_argument("--locations", type=int, default=25)
    parser.add_argument("--queries", type=int, default=None)
    parser.add_argument("--dim", type=int, default=DEFAULT_DIM)
    parser.add_argument("--embed-seed", type=int, default=DEFAULT_EMBED_SEED)
    parser.add_argument("--no-expansion", action="store_true",
                        help="disable context expansion on both query and document side")
    parser.add_argument("--cutoffs", default="5,20")
    parser.add_argument("--out", help="directory for run files, qrels and report.json")
    args = parser.parse_args()

    cutoffs = tuple(int(x) for x in args.cutoffs.split(","))
    t0 = time.perf_counter()
    bench = generate_synthetic_corpus(
        args.seed, args.records, args.locations, args.queries
    )
    t1 = time.perf_counter()
    expansion = not args.no_expansion
    provider = HashedNgramProvider(seed=args.embed_seed, dim=args.dim)
    index = build_benchmark_index(bench, provider, expand_documents=expansion)
    outcome = evaluate_benchmark(
        bench,
        provider=provider,
        expansion=expansion,
        cutoffs=cutoffs,
        index=index,
    )
    t2 = time.perf_counter()

    print(f"corpus: {len(bench.records)} records, {len(bench.queries)} queries, "
          f"{len(bench.truth)} graded pairs "
          f"(generated in {t1 - t0:.2f}s, evaluated in {t2 - t1:.2f}s)")
    header = f"{'method':<18} {'MRR':>7}"
    for n in cutoffs:
        header += f" {'P@' + str(n):>7}"
    for n in cutoffs:
        header += f" {'nDCG@' + str(n):>8}"
    print(header)
    for method in ("semantic", "bm25", "keyword"):
        report = outcome.reports[method]
        row = f"{report.tag:<18} {report.mrr:>7.4f}"
        for n in cutoffs:
            row += f" {report.precision[n]:>7.4f}"
        for n in cutoffs:
            row += f" {report.ndcg[n]:>8.4f}"
        print(row)

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_qrels(outcome.qrels, out / "qrels.txt")
        for method, run in outcome.runs.items():
            write_run(run, out / f"run_{method}.txt")
        report_doc = {m: r.as_dict() for m, r in outcome.reports.items()}
        (out / "report.json").write_text(
            json.dumps(report_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"wrote run files, qrels and report.json to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
