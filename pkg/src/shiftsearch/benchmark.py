"""End-to-end retrieval comparison on a synthetic benchmark.

Builds one index over the generated records (document-side context expansion
baked in at build time), runs the semantic method and both baselines with a
shared page size, and scores every run against the construction-time truth.
The context-expansion flag switches query-side expansion for the semantic
method and the full expansion condition (documents and query) for the
baselines, whose token statistics exist in both variants on the index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import SyntheticBenchmark
from .embedding import EmbeddingProvider, HashedNgramProvider
from .evaluation import MetricReport, QrelSet, RunFile, evaluate_run, run_from_results
from .index import Index, IndexConfig, build_index
from .search import METHODS, SearchConfig, run_search

DEFAULT_EMBED_SEED = 13
DEFAULT_DIM = 128


@dataclass(frozen=True)
class BenchmarkOutcome:
    qrels: QrelSet
    runs: Mapping[str, RunFile]
    reports: Mapping[str, MetricReport]


def default_provider(dim: int = DEFAULT_DIM, seed: int = DEFAULT_EMBED_SEED) -> HashedNgramProvider:
    return HashedNgramProvider(seed=seed, dim=dim)


def build_benchmark_index(
    bench: SyntheticBenchmark,
    provider: EmbeddingProvider,
    expand_documents: bool = True,
) -> Index:
    config = IndexConfig(expand_documents=expand_documents)
    return build_index(bench.records, bench.dictionary, provider, config)


def run_method(
    index: Index,
    provider: EmbeddingProvider,
    bench: SyntheticBenchmark,
    method: str,
    expansion: bool = True,
    page_size: int = 20,
) -> RunFile:
    config = SearchConfig(
        method=method, query_expansion=expansion, page_size=page_size
    )
    results = {
        qid: run_search(index, provider, text, config)
        for qid, text in bench.queries
    }
    tag = f"{method}-{'exp' if expansion else 'noexp'}"
    return run_from_results(tag, results)


def evaluate_benchmark(
    bench: SyntheticBenchmark,
    provider: EmbeddingProvider | None = None,
    methods: Sequence[str] = METHODS,
    expansion: bool = True,
    cutoffs: Sequence[int] = (5, 20),
    page_size: int = 20,
    index: Index | None = None,
) -> BenchmarkOutcome:
    provider = provider or default_provider()
    if index is None:
        index = build_benchmark_index(bench, provider)
    qrels = QrelSet(grades=dict(bench.truth))
    runs = {
        method: run_method(index, provider, bench, method, expansion, page_size)
        for method in methods
    }
    reports = {
        method: evaluate_run(run, qrels, cutoffs) for method, run in runs.items()
    }
    return BenchmarkOutcome(qrels=qrels, runs=runs, reports=reports)
