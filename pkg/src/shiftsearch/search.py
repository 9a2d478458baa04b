"""Query parsing, two-stage retrieval, term-similarity ranking, and the two
lexical baselines.

Stage one filters candidates by exact match: digit-containing tokens (and
quote-forced tokens) must all appear, case-folded, in every result. Terms
absent from the index vocabulary are dropped; with nothing left, the whole
collection is the candidate set. Stage two scores candidates by the harmonic
mean of document similarity (cosine of query and document vectors) and term
similarity (mean over query terms of the best cosine against any document
term, clamped to [0, 1]). Queries without semantic terms fall back to a
timestamp-descending listing.

Floating-point contract shared with the test oracles: similarities are float64
dots of the stored float32 vectors, one pair at a time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import FunctionalLocationEntry
from .embedding import EmbeddingProvider, cosine, embed_query
from .index import Index, bm25_terms, keyword_terms
from .preprocess import (
    NormalizationConfig,
    TokenKind,
    expand_query_text,
    normalize,
    tokenize,
)

METHODS = ("semantic", "bm25", "keyword")

BM25_K1 = 1.2
BM25_B = 0.75
BM25_THRESHOLD = 0.15

_QUOTED_RE = re.compile(r'"([^"]*)"')


class EmptyQueryError(ValueError):
    pass


class ProviderMismatchError(ValueError):
    """Query-time provider does not match the fingerprint the index was built with."""


@dataclass(frozen=True)
class SearchConfig:
    k: int = 200
    page_size: int = 20
    query_expansion: bool = True
    method: str = "semantic"

    def __post_init__(self) -> None:
        if not (1 <= self.page_size <= self.k):
            raise ValueError(f"need 1 <= page_size <= k, got page_size={self.page_size} k={self.k}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")


@dataclass(frozen=True)
class Query:
    raw: str
    exact_terms: frozenset[str]
    semantic_terms: tuple[str, ...]
    vector: np.ndarray


@dataclass(frozen=True)
class SearchResult:
    record_id: str
    doc_sim: float
    term_sim: float
    score: float
    rank: int


def harmonic_mean(a: float, b: float) -> float:
    if a + b == 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


def parse_query(
    raw: str,
    dictionary: Sequence[FunctionalLocationEntry],
    provider: EmbeddingProvider,
    config: SearchConfig,
    norm: NormalizationConfig | None = None,
) -> Query:
    """Split raw text into exact-match terms and semantic terms.

    Double-quoted tokens force exact match and skip semantic treatment; other
    digit-containing tokens go to the exact set (Code tokens additionally stay
    semantic). Expansion, stopwords and lemmas follow the index configuration.
    """
    if raw is None or not raw.strip():
        raise EmptyQueryError("empty query")
    norm = norm or NormalizationConfig()

    exact: set[str] = set()

    def _force(match: re.Match) -> str:
        for tok in tokenize(match.group(1)):
            exact.add(tok.surface.casefold())
        return " "

    remainder = _QUOTED_RE.sub(_force, raw)
    text = expand_query_text(remainder, dictionary) if config.query_expansion else remainder

    semantic: list[str] = []
    for tok in normalize(tokenize(text), norm):
        if tok.kind is TokenKind.NUMERIC:
            exact.add(tok.normalized.casefold())
        elif tok.kind is TokenKind.CODE:
            exact.add(tok.normalized.casefold())
            semantic.append(tok.normalized)
        else:
            semantic.append(tok.normalized)

    if not exact and not semantic:
        raise EmptyQueryError("empty query")
    return Query(
        raw=raw,
        exact_terms=frozenset(exact),
        semantic_terms=tuple(semantic),
        vector=embed_query(semantic, provider),
    )


def retrieve_candidates(query: Query, index: Index) -> list[str]:
    """AND over exact terms found in the vocabulary; none found -> whole collection."""
    found = sorted(t for t in query.exact_terms if t in index.folded_postings)
    if not found:
        return [rec.id for rec in index.records]
    candidate_set = set(index.folded_postings[found[0]])
    for term in found[1:]:
        candidate_set &= set(index.folded_postings[term])
    return sorted(candidate_set)


def term_similarity(
    query_terms: Sequence[str],
    doc_terms: Sequence[str],
    provider: EmbeddingProvider,
) -> float:
    """Mean over query terms of the best cosine to any document term.

    Each per-term maximum is clamped to [0, 1] before averaging; an empty
    document term set scores 0.
    """
    if not query_terms:
        raise ValueError("query term list must be non-empty")
    if not doc_terms:
        return 0.0
    doc_vecs = [provider.term_vector(dt) for dt in doc_terms]
    total = 0.0
    for qt in query_terms:
        qv = provider.term_vector(qt)
        best = max(cosine(qv, dv) for dv in doc_vecs)
        total += max(0.0, best)
    return total / len(query_terms)


def rank(
    query: Query,
    candidates: Sequence[str],
    index: Index,
    provider: EmbeddingProvider,
    config: SearchConfig,
) -> list[SearchResult]:
    """Score candidates and produce the final page.

    Top k by document similarity, then harmonic mean with term similarity;
    ties break by timestamp descending, then record id. Without semantic terms
    the candidates are listed newest first with score 0.
    """
    if not query.semantic_terms:
        order = sorted(candidates, key=lambda rid: (-index.timestamps[rid], rid))
        return [
            SearchResult(rid, 0.0, 0.0, 0.0, i + 1)
            for i, rid in enumerate(order[: config.page_size])
        ]

    q64 = query.vector.astype(np.float64)
    scored: list[tuple[str, float]] = []
    for rid in candidates:
        dv = index.doc_vectors[index.id_to_row[rid]].astype(np.float64)
        doc_sim = max(-1.0, min(1.0, float(np.dot(q64, dv))))
        scored.append((rid, doc_sim))
    scored.sort(key=lambda item: (-item[1], -index.timestamps[item[0]], item[0]))
    kept = scored[: config.k]

    rows: list[tuple[str, float, float, float]] = []
    for rid, doc_sim in kept:
        ts_value = term_similarity(query.semantic_terms, index.doc_terms[rid], provider)
        score = harmonic_mean(max(doc_sim, 0.0), ts_value)
        rows.append((rid, doc_sim, ts_value, score))
    rows.sort(key=lambda item: (-item[3], -index.timestamps[item[0]], item[0]))
    return [
        SearchResult(rid, doc_sim, ts_value, score, i + 1)
        for i, (rid, doc_sim, ts_value, score) in enumerate(rows[: config.page_size])
    ]


def _baseline_query_text(raw: str | Query, index: Index, config: SearchConfig) -> str:
    if isinstance(raw, Query):
        raw = raw.raw
    if raw is None or not raw.strip():
        raise EmptyQueryError("empty query")
    if config.query_expansion:
        return expand_query_text(raw, index.dictionary)
    return raw


def keyword_search(raw: str | Query, index: Index, config: SearchConfig) -> list[SearchResult]:
    """OR retrieval over lowercased non-stopword terms, ranked by overlap then recency."""
    text = _baseline_query_text(raw, index, config)
    norm = index.config.normalization_config()
    q_terms = frozenset(keyword_terms(tokenize(text), norm))
    if not q_terms:
        raise EmptyQueryError("empty query")
    view = index.baseline_views[config.query_expansion]
    hits: list[tuple[str, int]] = []
    for rec in index.records:
        overlap = len(q_terms & view.keyword_sets[rec.id])
        if overlap:
            hits.append((rec.id, overlap))
    hits.sort(key=lambda item: (-item[1], -index.timestamps[item[0]], item[0]))
    n_q = len(q_terms)
    return [
        SearchResult(rid, 0.0, 0.0, overlap / n_q, i + 1)
        for i, (rid, overlap) in enumerate(hits[: config.page_size])
    ]


def bm25_search(raw: str | Query, index: Index, config: SearchConfig) -> list[SearchResult]:
    """Okapi BM25 (k1=1.2, b=0.75), scores max-normalized per query, cut at 0.15."""
    text = _baseline_query_text(raw, index, config)
    norm = index.config.normalization_config()
    q_terms = sorted(set(bm25_terms(tokenize(text), norm)))
    if not q_terms:
        raise EmptyQueryError("empty query")
    view = index.baseline_views[config.query_expansion]
    n_docs = index.doc_count
    avg_len = view.avg_doc_length

    scores: list[tuple[str, float]] = []
    for rec in index.records:
        counts = view.bm25_counts[rec.id]
        doc_len = view.doc_lengths[rec.id]
        score = 0.0
        for term in q_terms:
            tf = counts.get(term, 0)
            if tf == 0:
                continue
            df = view.df[term]
            idf = np.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
            denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * doc_len / avg_len)
            score += float(idf) * tf * (BM25_K1 + 1.0) / denom
        if score > 0.0:
            scores.append((rec.id, score))
    if not scores:
        return []
    max_score = max(s for _, s in scores)
    kept = [
        (rid, s / max_score) for rid, s in scores if s / max_score >= BM25_THRESHOLD
    ]
    kept.sort(key=lambda item: (-item[1], -index.timestamps[item[0]], item[0]))
    return [
        SearchResult(rid, 0.0, 0.0, score, i + 1)
        for i, (rid, score) in enumerate(kept[: config.page_size])
    ]


def run_search(
    index: Index,
    provider: EmbeddingProvider,
    raw: str,
    config: SearchConfig | None = None,
) -> list[SearchResult]:
    """Dispatch to the configured method; the semantic path checks fingerprints."""
    config = config or SearchConfig()
    if config.method == "keyword":
        return keyword_search(raw, index, config)
    if config.method == "bm25":
        return bm25_search(raw, index, config)
    if provider.fingerprint != index.provider_fingerprint:
        raise ProviderMismatchError(
            "provider fingerprint does not match the index "
            f"({provider.fingerprint[:12]}... vs {index.provider_fingerprint[:12]}...)"
        )
    norm = index.config.normalization_config()
    query = parse_query(raw, index.dictionary, provider, config, norm)
    candidates = retrieve_candidates(query, index)
    return rank(query, candidates, index, provider, config)


class Searcher:
    """Read-only search facade bound to one index and provider pair."""

    def __init__(self, index: Index, provider: EmbeddingProvider) -> None:
        if provider.fingerprint != index.provider_fingerprint:
            raise ProviderMismatchError(
                "provider fingerprint does not match the index "
                f"({provider.fingerprint[:12]}... vs {index.provider_fingerprint[:12]}...)"
            )
        self.index = index
        self.provider = provider

    def search(self, raw: str, config: SearchConfig | None = None) -> list[SearchResult]:
        return run_search(self.index, self.provider, raw, config)
