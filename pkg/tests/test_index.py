import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shiftsearch.corpus import FunctionalLocationEntry, Record, generate_synthetic_corpus
from shiftsearch.embedding import HashedNgramProvider
from shiftsearch.index import (
    IndexConfig,
    SearchIndexError,
    build_index,
    load_index,
    posting_key,
    save_index,
    smoothed_idf,
)

DICT = [FunctionalLocationEntry("PLANT1-K200", "K200", "Kessel")]

RECORDS = [
    Record(id="r1", timestamp=300, title="Leckage",
           body=(("ereignis", "Pumpe undicht an K200"),)),
    Record(id="r2", timestamp=200, title="Pumpe geprüft",
           body=(("ereignis", "Wartung 4711 abgeschlossen"),)),
    Record(id="r3", timestamp=100, title="Rundgang",
           body=(("ereignis", "keine Auffälligkeit"),)),
]


@pytest.fixture(scope="module")
def tiny_provider():
    return HashedNgramProvider(seed=13, dim=32)


@pytest.fixture(scope="module")
def tiny_index(tiny_provider):
    return build_index(RECORDS, DICT, tiny_provider, IndexConfig())


class TestPostingKey:
    def test_word_preserves_case(self):
        assert posting_key("Pumpe") == "Pumpe"

    def test_code_and_numeric_folded(self):
        assert posting_key("K200") == "k200"
        assert posting_key("105.12") == "105.12"


class TestIdf:
    def test_hand_computed_value(self):
        # 3 docs, term in one: ln(4/2) + 1
        assert smoothed_idf(3, 1) == pytest.approx(1.6931, abs=1e-4)

    def test_everywhere_term_stays_positive(self):
        assert smoothed_idf(10, 10) == pytest.approx(1.0)
        assert smoothed_idf(10, 0) > smoothed_idf(10, 5) > 0


class TestBuild:
    def test_postings_word_case_preserved(self, tiny_index):
        assert tiny_index.postings["Pumpe"] == ("r1", "r2")
        assert "pumpe" not in tiny_index.postings

    def test_postings_code_numeric_folded(self, tiny_index):
        assert tiny_index.postings["k200"] == ("r1",)
        assert tiny_index.postings["4711"] == ("r2",)

    def test_folded_view_merges_cases(self, tiny_index):
        assert tiny_index.folded_postings["pumpe"] == ("r1", "r2")
        assert tiny_index.folded_postings["k200"] == ("r1",)

    def test_doc_terms_sorted_without_numerics_and_stopwords(self, tiny_index):
        terms = tiny_index.doc_terms["r2"]
        assert terms == tuple(sorted(terms))
        assert "4711" not in terms
        assert "Wartung" in terms and "Pumpe" in terms

    def test_expansion_injects_description(self, tiny_index, tiny_provider):
        # r1 mentions K200 only by short id; expansion adds the description
        assert "Kessel" in tiny_index.doc_terms["r1"]
        plain = build_index(RECORDS, DICT, tiny_provider,
                            IndexConfig(expand_documents=False))
        assert "Kessel" not in plain.doc_terms["r1"]

    def test_idf_matches_definition(self, tiny_index):
        n = tiny_index.doc_count
        for term, ids in tiny_index.postings.items():
            assert tiny_index.idf[term] == pytest.approx(
                math.log((1 + n) / (1 + len(ids))) + 1.0
            )

    def test_doc_vectors_unit_norm(self, tiny_index):
        norms = np.linalg.norm(tiny_index.doc_vectors, axis=1)
        assert np.all(np.abs(norms - 1.0) < 1e-5)

    def test_timestamps_and_rows(self, tiny_index):
        assert tiny_index.timestamps == {"r1": 300, "r2": 200, "r3": 100}
        assert tiny_index.record("r2").id == "r2"
        with pytest.raises(KeyError):
            tiny_index.record("nope")

    def test_baseline_views_for_both_expansion_modes(self, tiny_index):
        assert set(tiny_index.baseline_views) == {True, False}
        view = tiny_index.baseline_views[True]
        assert "kessel" in view.keyword_sets["r1"]
        assert "kessel" not in tiny_index.baseline_views[False].keyword_sets["r1"]

    def test_bm25_counts_keep_stopwords(self, tiny_index):
        counts = tiny_index.baseline_views[False].bm25_counts["r1"]
        assert counts.get("an") == 1

    def test_empty_collection_rejected(self, tiny_provider):
        with pytest.raises(SearchIndexError, match="empty collection"):
            build_index([], DICT, tiny_provider, IndexConfig())

    def test_duplicate_ids_rejected(self, tiny_provider):
        dup = [RECORDS[0], RECORDS[0]]
        with pytest.raises(SearchIndexError, match="duplicate"):
            build_index(dup, DICT, tiny_provider, IndexConfig())


class TestConfig:
    def test_default_stopwords_sorted(self):
        stopwords = IndexConfig().effective_stopwords()
        assert list(stopwords) == sorted(stopwords)
        assert "der" in stopwords

    def test_hash_sensitive_to_content(self):
        base = IndexConfig().config_hash()
        assert IndexConfig(expand_documents=False).config_hash() != base
        assert IndexConfig(stopwords=("der",)).config_hash() != base
        assert IndexConfig(lemma=(("Pumpen", "Pumpe"),)).config_hash() != base
        assert IndexConfig().config_hash() == base


class TestPersistence:
    def test_directory_layout(self, tiny_index, tmp_path):
        save_index(tiny_index, tmp_path / "idx")
        names = sorted(p.name for p in (tmp_path / "idx").iterdir())
        assert names == ["docstore.jsonl", "manifest.json", "postings.json", "vectors.f32"]

    def test_round_trip_equality(self, tiny_index, tmp_path):
        save_index(tiny_index, tmp_path / "idx")
        loaded = load_index(tmp_path / "idx")
        assert loaded.records == tiny_index.records
        assert loaded.dictionary == tiny_index.dictionary
        assert loaded.config == tiny_index.config
        assert loaded.postings == tiny_index.postings
        assert loaded.folded_postings == tiny_index.folded_postings
        assert loaded.doc_terms == tiny_index.doc_terms
        assert loaded.idf == tiny_index.idf
        assert loaded.provider_fingerprint == tiny_index.provider_fingerprint
        assert np.array_equal(loaded.doc_vectors, tiny_index.doc_vectors)
        assert loaded.baseline_views == tiny_index.baseline_views

    def test_vectors_stored_verbatim(self, tiny_index, tmp_path):
        save_index(tiny_index, tmp_path / "idx")
        raw = (tmp_path / "idx" / "vectors.f32").read_bytes()
        assert raw == tiny_index.doc_vectors.astype("<f4").tobytes()

    def test_unsupported_version_rejected(self, tiny_index, tmp_path):
        save_index(tiny_index, tmp_path / "idx")
        manifest_path = tmp_path / "idx" / "manifest.json"
        manifest = json.loads(manifest_path.read_text())
        manifest["format_version"] = 99
        manifest_path.write_text(json.dumps(manifest))
        with pytest.raises(SearchIndexError, match="version 99.*supported versions: 1"):
            load_index(tmp_path / "idx")

    def test_config_tampering_detected(self, tiny_index, tmp_path):
        save_index(tiny_index, tmp_path / "idx")
        manifest_path = tmp_path / "idx" / "manifest.json"
        manifest = json.loads(manifest_path.read_text())
        manifest["config"]["expand_documents"] = False
        manifest_path.write_text(json.dumps(manifest))
        with pytest.raises(SearchIndexError, match="config hash mismatch"):
            load_index(tmp_path / "idx")

    def test_truncated_vectors_detected(self, tiny_index, tmp_path):
        save_index(tiny_index, tmp_path / "idx")
        vec_path = tmp_path / "idx" / "vectors.f32"
        vec_path.write_bytes(vec_path.read_bytes()[:-4])
        with pytest.raises(SearchIndexError, match="dimension mismatch"):
            load_index(tmp_path / "idx")

    def test_docstore_count_mismatch_detected(self, tiny_index, tmp_path):
        save_index(tiny_index, tmp_path / "idx")
        store = tmp_path / "idx" / "docstore.jsonl"
        lines = store.read_text().splitlines()
        store.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(SearchIndexError):
            load_index(tmp_path / "idx")

    def test_corrupt_docstore_detected(self, tiny_index, tmp_path):
        save_index(tiny_index, tmp_path / "idx")
        (tmp_path / "idx" / "docstore.jsonl").write_text("{broken\n")
        with pytest.raises(SearchIndexError, match="corrupt docstore"):
            load_index(tmp_path / "idx")


class TestStructuralInvariants:
    @given(st.integers(0, 30))
    def test_postings_sorted_and_df_consistent(self, seed):
        bench = generate_synthetic_corpus(seed, 15, 3)
        provider = HashedNgramProvider(seed=1, dim=16)
        index = build_index(bench.records, bench.dictionary, provider, IndexConfig())
        known = {r.id for r in bench.records}
        for term, ids in index.postings.items():
            assert list(ids) == sorted(ids)
            assert len(set(ids)) == len(ids)
            assert set(ids) <= known
            assert index.df(term) == len(ids)
        for ids in index.folded_postings.values():
            assert list(ids) == sorted(ids)

    @given(st.integers(0, 30))
    def test_doc_terms_appear_in_postings(self, seed):
        bench = generate_synthetic_corpus(seed, 15, 3)
        provider = HashedNgramProvider(seed=1, dim=16)
        index = build_index(bench.records, bench.dictionary, provider, IndexConfig())
        for rid, terms in index.doc_terms.items():
            for term in terms:
                assert rid in index.postings[posting_key(term)]
