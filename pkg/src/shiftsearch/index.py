"""Immutable search index: boolean postings, document vectors, per-document
term sets, timestamps, and derived baseline statistics.

On disk an index is a directory of four versioned files:

    manifest.json   doc count, dim, provider fingerprint/spec, config snapshot
                    (including the functional-location dictionary), config hash
    postings.json   term -> sorted record-id list
    vectors.f32     little-endian float32, row-major, docstore order
    docstore.jsonl  the records themselves (JSON-lines corpus format)

Everything else (document term sets, baseline token statistics, idf) is
derived deterministically from the docstore at load time, so a round-tripped
index reproduces every ranking bit for bit: vectors are read back verbatim and
the derivations are pure functions.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import (
    JSON_LINES,
    CorpusError,
    FunctionalLocationEntry,
    Record,
    load_corpus,
    record_text,
    save_corpus,
)
from .embedding import EmbeddingProvider, embed_document
from .preprocess import (
    GERMAN_STOPWORDS,
    NormalizationConfig,
    Token,
    TokenKind,
    classify_token,
    expand_record,
    tokenize,
    normalize,
)

FORMAT_VERSION = 1

_MANIFEST = "manifest.json"
_POSTINGS = "postings.json"
_VECTORS = "vectors.f32"
_DOCSTORE = "docstore.jsonl"


class SearchIndexError(ValueError):
    """Raised on build or load contract violations."""


@dataclass(frozen=True)
class IndexConfig:
    """Build-time configuration captured in the manifest.

    stopwords/lemma default to the built-in German stopword list and an empty
    lemma table; expand_documents applies dictionary context expansion to
    record text before indexing.
    """

    expand_documents: bool = True
    preserve_case: bool = True
    stopwords: tuple[str, ...] | None = None
    lemma: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        # canonical sorted form so configs compare equal across save/load
        source = GERMAN_STOPWORDS if self.stopwords is None else self.stopwords
        object.__setattr__(self, "stopwords", tuple(sorted(set(source))))
        object.__setattr__(
            self, "lemma", tuple(sorted(tuple(pair) for pair in self.lemma))
        )

    def effective_stopwords(self) -> tuple[str, ...]:
        return self.stopwords

    def normalization_config(self) -> NormalizationConfig:
        return NormalizationConfig(
            stopword_set=frozenset(self.effective_stopwords()),
            lemma_table=dict(self.lemma),
            preserve_case=self.preserve_case,
        )

    def as_dict(self) -> dict:
        return {
            "expand_documents": self.expand_documents,
            "preserve_case": self.preserve_case,
            "stopwords": list(self.effective_stopwords()),
            "lemma": [list(pair) for pair in sorted(self.lemma)],
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.as_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class BaselineView:
    """Per-document token statistics for the keyword and BM25 baselines."""

    keyword_sets: Mapping[str, frozenset[str]]
    bm25_counts: Mapping[str, Mapping[str, int]]
    doc_lengths: Mapping[str, int]
    df: Mapping[str, int]
    avg_doc_length: float


@dataclass
class Index:
    """In-memory index; immutable by convention once built."""

    records: tuple[Record, ...]
    dictionary: tuple[FunctionalLocationEntry, ...]
    config: IndexConfig
    provider_fingerprint: str
    provider_spec: dict
    dim: int
    postings: dict[str, tuple[str, ...]]
    folded_postings: dict[str, tuple[str, ...]]
    doc_vectors: np.ndarray
    doc_terms: dict[str, tuple[str, ...]]
    timestamps: dict[str, int]
    idf: dict[str, float]
    id_to_row: dict[str, int]
    baseline_views: dict[bool, BaselineView]

    @property
    def doc_count(self) -> int:
        return len(self.records)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def record(self, record_id: str) -> Record:
        row = self.id_to_row.get(record_id)
        if row is None:
            raise KeyError(record_id)
        return self.records[row]

    def doc_vector(self, record_id: str) -> np.ndarray:
        return self.doc_vectors[self.id_to_row[record_id]]


def posting_key(term: str) -> str:
    """Postings store Word terms case-preserved, Code/Numeric case-folded."""
    kind = classify_token(term)
    if kind is TokenKind.WORD:
        return term
    return term.casefold()


def smoothed_idf(doc_count: int, df: int) -> float:
    return math.log((1 + doc_count) / (1 + df)) + 1.0


def _check_unique_ids(records: Sequence[Record]) -> None:
    seen: set[str] = set()
    for rec in records:
        if rec.id in seen:
            raise SearchIndexError(f"duplicate record id {rec.id!r}")
        seen.add(rec.id)


def _tokenized_texts(
    records: Sequence[Record],
    dictionary: Sequence[FunctionalLocationEntry],
) -> tuple[list[list[Token]], list[list[Token]]]:
    """Token lists per record for the plain and the context-expanded text."""
    plain = []
    expanded = []
    for rec in records:
        plain.append(tokenize(record_text(rec)))
        expanded_rec, _ = expand_record(rec, dictionary)
        expanded.append(tokenize(record_text(expanded_rec)))
    return plain, expanded


def keyword_terms(tokens: Sequence[Token], norm: NormalizationConfig) -> frozenset[str]:
    return frozenset(
        t.surface.casefold() for t in tokens if not norm.is_stopword(t.surface)
    )


def bm25_terms(tokens: Sequence[Token], norm: NormalizationConfig) -> list[str]:
    # lowercased and lemmatized, stopwords kept
    out = []
    for t in tokens:
        if t.kind is TokenKind.WORD:
            out.append(norm.lemma_table.get(t.surface, t.surface).casefold())
        else:
            out.append(t.surface.casefold())
    return out


def _baseline_view(
    records: Sequence[Record],
    token_lists: Sequence[list[Token]],
    norm: NormalizationConfig,
) -> BaselineView:
    keyword_sets: dict[str, frozenset[str]] = {}
    bm25_counts: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    df: Counter[str] = Counter()
    total_len = 0
    for rec, tokens in zip(records, token_lists):
        keyword_sets[rec.id] = keyword_terms(tokens, norm)
        terms = bm25_terms(tokens, norm)
        counts = dict(Counter(terms))
        bm25_counts[rec.id] = counts
        doc_lengths[rec.id] = len(terms)
        total_len += len(terms)
        df.update(counts.keys())
    avg = total_len / len(records) if records else 0.0
    return BaselineView(
        keyword_sets=keyword_sets,
        bm25_counts=bm25_counts,
        doc_lengths=doc_lengths,
        df=dict(df),
        avg_doc_length=avg,
    )


def _fold_postings(postings: Mapping[str, tuple[str, ...]]) -> dict[str, tuple[str, ...]]:
    folded: dict[str, set[str]] = {}
    for term, ids in postings.items():
        folded.setdefault(term.casefold(), set()).update(ids)
    return {term: tuple(sorted(ids)) for term, ids in folded.items()}


def _assemble(
    records: Sequence[Record],
    dictionary: Sequence[FunctionalLocationEntry],
    config: IndexConfig,
    provider_fingerprint: str,
    provider_spec: dict,
    postings: dict[str, tuple[str, ...]],
    doc_vectors: np.ndarray,
    tokens_plain: list[list[Token]],
    tokens_expanded: list[list[Token]],
) -> Index:
    norm = config.normalization_config()
    main_tokens = tokens_expanded if config.expand_documents else tokens_plain
    doc_terms: dict[str, tuple[str, ...]] = {}
    for rec, tokens in zip(records, main_tokens):
        normalized = normalize(tokens, norm)
        terms = {t.normalized for t in normalized if t.kind is not TokenKind.NUMERIC}
        doc_terms[rec.id] = tuple(sorted(terms))
    doc_count = len(records)
    idf = {term: smoothed_idf(doc_count, len(ids)) for term, ids in postings.items()}
    views = {
        False: _baseline_view(records, tokens_plain, norm),
        True: _baseline_view(records, tokens_expanded, norm),
    }
    return Index(
        records=tuple(records),
        dictionary=tuple(dictionary),
        config=config,
        provider_fingerprint=provider_fingerprint,
        provider_spec=dict(provider_spec),
        dim=int(doc_vectors.shape[1]),
        postings=postings,
        folded_postings=_fold_postings(postings),
        doc_vectors=doc_vectors,
        doc_terms=doc_terms,
        timestamps={rec.id: rec.timestamp for rec in records},
        idf=idf,
        id_to_row={rec.id: i for i, rec in enumerate(records)},
        baseline_views=views,
    )


def build_index(
    records: Sequence[Record],
    dictionary: Sequence[FunctionalLocationEntry],
    provider: EmbeddingProvider,
    config: IndexConfig | None = None,
) -> Index:
    """Build the full index from records; pure in all arguments.

    Postings cover every token kind; document vectors and term sets use
    normalized Word/Code terms only.
    """
    if not records:
        raise SearchIndexError("empty collection")
    _check_unique_ids(records)
    config = config or IndexConfig()
    norm = config.normalization_config()
    tokens_plain, tokens_expanded = _tokenized_texts(records, dictionary)
    main_tokens = tokens_expanded if config.expand_documents else tokens_plain

    postings_sets: dict[str, set[str]] = {}
    per_doc_counts: dict[str, Counter[str]] = {}
    for rec, tokens in zip(records, main_tokens):
        normalized = normalize(tokens, norm)
        for tok in normalized:
            postings_sets.setdefault(posting_key(tok.normalized), set()).add(rec.id)
        per_doc_counts[rec.id] = Counter(
            t.normalized for t in normalized if t.kind is not TokenKind.NUMERIC
        )
    postings = {
        term: tuple(sorted(ids)) for term, ids in sorted(postings_sets.items())
    }
    doc_count = len(records)
    idf_by_key = {term: smoothed_idf(doc_count, len(ids)) for term, ids in postings.items()}

    doc_vectors = np.zeros((doc_count, provider.dim), dtype=np.float32)
    for i, rec in enumerate(records):
        counts = per_doc_counts[rec.id]
        term_idf = {term: idf_by_key[posting_key(term)] for term in counts}
        doc_vectors[i] = embed_document(counts, term_idf, provider)

    return _assemble(
        records, dictionary, config, provider.fingerprint, provider.spec,
        postings, doc_vectors, tokens_plain, tokens_expanded,
    )


def save_index(index: Index, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "doc_count": index.doc_count,
        "dim": index.dim,
        "provider_fingerprint": index.provider_fingerprint,
        "provider": index.provider_spec,
        "config": index.config.as_dict(),
        "config_hash": index.config.config_hash(),
        "dictionary": [
            [e.long_id, e.short_id, e.description] for e in index.dictionary
        ],
    }
    (directory / _MANIFEST).write_text(
        json.dumps(manifest, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    postings_doc = {
        "version": FORMAT_VERSION,
        "postings": {term: list(ids) for term, ids in sorted(index.postings.items())},
    }
    (directory / _POSTINGS).write_text(
        json.dumps(postings_doc, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    (directory / _VECTORS).write_bytes(
        np.ascontiguousarray(index.doc_vectors, dtype="<f4").tobytes()
    )
    save_corpus(index.records, directory / _DOCSTORE, JSON_LINES)


def load_index(directory: str | Path) -> Index:
    directory = Path(directory)
    manifest_path = directory / _MANIFEST
    if not manifest_path.exists():
        raise SearchIndexError(f"no index manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise SearchIndexError(
            f"unsupported index format version {version!r}; supported versions: {FORMAT_VERSION}"
        )
    config_doc = manifest["config"]
    config = IndexConfig(
        expand_documents=bool(config_doc["expand_documents"]),
        preserve_case=bool(config_doc["preserve_case"]),
        stopwords=tuple(config_doc["stopwords"]),
        lemma=tuple(tuple(pair) for pair in config_doc["lemma"]),
    )
    if config.config_hash() != manifest["config_hash"]:
        raise SearchIndexError("config hash mismatch: manifest config was edited")
    dictionary = [
        FunctionalLocationEntry(long_id, short_id, description)
        for long_id, short_id, description in manifest["dictionary"]
    ]
    doc_count = int(manifest["doc_count"])
    dim = int(manifest["dim"])

    postings_doc = json.loads((directory / _POSTINGS).read_text(encoding="utf-8"))
    if postings_doc.get("version") != FORMAT_VERSION:
        raise SearchIndexError(
            f"unsupported postings version {postings_doc.get('version')!r}; "
            f"supported versions: {FORMAT_VERSION}"
        )
    postings = {
        term: tuple(ids) for term, ids in postings_doc["postings"].items()
    }

    raw = (directory / _VECTORS).read_bytes()
    expected = doc_count * dim * 4
    if len(raw) != expected:
        raise SearchIndexError(
            f"vectors file holds {len(raw)} bytes but manifest implies {expected} "
            f"({doc_count} x {dim} float32): dimension mismatch"
        )
    doc_vectors = np.frombuffer(raw, dtype="<f4").reshape(doc_count, dim).copy()

    try:
        records = load_corpus(directory / _DOCSTORE, JSON_LINES)
    except CorpusError as exc:
        raise SearchIndexError(f"corrupt docstore: {exc}") from None
    if len(records) != doc_count:
        raise SearchIndexError(
            f"docstore holds {len(records)} records but manifest says {doc_count}"
        )

    tokens_plain, tokens_expanded = _tokenized_texts(records, dictionary)
    return _assemble(
        records, dictionary, config,
        manifest["provider_fingerprint"], manifest.get("provider", {}),
        postings, doc_vectors, tokens_plain, tokens_expanded,
    )
