"""Create a frozen assessment plan for a panel of assessors.

Runs the chosen ranking method over a query file against an existing index,
freezes the top results per query, distributes queries round-robin so that
each query is judged by the requested number of assessors, and writes the
plan JSON consumed by the service's /api/plan endpoint.

Usage:
    python3 scripts/make_assessment_plan.py --index idx/ --queries queries.tsv \
        --assessors a1,a2,a3 --per-assessor 20 --redundancy 2 --out plan.json
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from shiftsearch.embedding import provider_from_spec  # noqa: E402
from shiftsearch.evaluation import assign_queries  # noqa: E402
from shiftsearch.index import load_index  # noqa: E402
from shiftsearch.search import METHODS, SearchConfig, run_search  # noqa: E402
from shiftsearch.service import AssessmentPlan, save_plan  # noqa: E402


def load_query_file(path: str) -> dict[str, str]:
    """Read a two-column query file (query_id TAB text, optional header)."""
    queries: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        qid, _, text = line.partition("\t")
        if qid == "query_id":
            continue
        queries[qid] = text
    return queries


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--index", required=True)
    parser.add_argument("--queries", required=True)
    parser.add_argument("--assessors", required=True,
                        help="comma-separated assessor ids")
    parser.add_argument("--per-assessor", type=int, default=20)
    parser.add_argument("--redundancy", type=int, default=2)
    parser.add_argument("--method", default="semantic", choices=list(METHODS))
    parser.add_argument("--depth", type=int, default=20,
                        help="how many top results to freeze per query")
    parser.add_argument("--no-expansion", action="store_true")
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    index = load_index(args.index)
    provider = provider_from_spec(index.provider_spec)
    queries = load_query_file(args.queries)
    if not queries:
        print("error: no queries found", file=sys.stderr)
        return 1
    assessors = [a.strip() for a in args.assessors.split(",") if a.strip()]

    assignments = assign_queries(
        sorted(queries), assessors, args.per_assessor, args.redundancy
    )

    config = SearchConfig(
        method=args.method,
        page_size=args.depth,
        query_expansion=not args.no_expansion,
    )
    rankings = {
        qid: tuple(r.record_id for r in run_search(index, provider, text, config))
        for qid, text in sorted(queries.items())
    }

    plan = AssessmentPlan(
        version=1,
        assessment_method=args.method,
        queries=queries,
        assignments={a: tuple(qids) for a, qids in assignments.items()},
        rankings={args.method: rankings},
    )
    save_plan(plan, args.out)
    judged = sum(len(qids) for qids in assignments.values())
    print(f"plan written to {args.out}: {len(queries)} queries, "
          f"{len(assessors)} assessors, {judged} assignments "
          f"(redundancy {args.redundancy}, depth {args.depth})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
