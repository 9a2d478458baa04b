"""Semantic search over short semi-structured plant-log records.

The package splits into ingestion (corpus), text preparation (preprocess),
subword embeddings (embedding), the searchable index (index), ranking
(search), the assessment and metrics toolkit (evaluation), a benchmark driver
(benchmark), and the HTTP service (service). The cli module wires everything
into the `shiftsearch` command.
"""

from .corpus import (
    CorpusError,
    CorpusStats,
    FunctionalLocationEntry,
    Record,
    SyntheticBenchmark,
    corpus_stats,
    generate_synthetic_corpus,
    load_corpus,
    load_dictionary,
    record_text,
    save_corpus,
    save_dictionary,
)
from .embedding import (
    EmbeddingProvider,
    FileVectorProvider,
    HashedNgramProvider,
    cosine,
    embed_document,
    embed_query,
    provider_from_spec,
)
from .evaluation import (
    FeedbackEvent,
    MetricReport,
    QrelSet,
    RunFile,
    assign_queries,
    cohens_kappa,
    dedup_events,
    evaluate_run,
    fuse_votes,
    load_qrels,
    load_run,
    run_from_results,
    write_qrels,
    write_run,
)
from .index import (
    Index,
    IndexConfig,
    SearchIndexError,
    build_index,
    load_index,
    save_index,
)
from .preprocess import (
    NormalizationConfig,
    Token,
    TokenKind,
    expand_query_text,
    expand_record,
    normalize,
    tokenize,
)
from .search import (
    EmptyQueryError,
    ProviderMismatchError,
    SearchConfig,
    Searcher,
    SearchResult,
    parse_query,
    run_search,
)
from .service import AssessmentPlan, ServiceConfig, build_app, load_service_config

__version__ = "0.1.0"

__all__ = [
    "AssessmentPlan",
    "CorpusError",
    "CorpusStats",
    "EmbeddingProvider",
    "EmptyQueryError",
    "FeedbackEvent",
    "FileVectorProvider",
    "FunctionalLocationEntry",
    "HashedNgramProvider",
    "Index",
    "IndexConfig",
    "MetricReport",
    "NormalizationConfig",
    "ProviderMismatchError",
    "QrelSet",
    "Record",
    "RunFile",
    "SearchConfig",
    "SearchIndexError",
    "SearchResult",
    "Searcher",
    "ServiceConfig",
    "SyntheticBenchmark",
    "Token",
    "TokenKind",
    "assign_queries",
    "build_app",
    "build_index",
    "cohens_kappa",
    "corpus_stats",
    "cosine",
    "dedup_events",
    "embed_document",
    "embed_query",
    "evaluate_run",
    "expand_query_text",
    "expand_record",
    "fuse_votes",
    "generate_synthetic_corpus",
    "load_corpus",
    "load_dictionary",
    "load_index",
    "load_qrels",
    "load_run",
    "load_service_config",
    "normalize",
    "parse_query",
    "provider_from_spec",
    "record_text",
    "run_from_results",
    "run_search",
    "save_corpus",
    "save_dictionary",
    "save_index",
    "tokenize",
    "write_qrels",
    "write_run",
]
