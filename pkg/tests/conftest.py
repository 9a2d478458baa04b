import pytest
from hypothesis import settings

from shiftsearch.corpus import generate_synthetic_corpus
from shiftsearch.embedding import HashedNgramProvider
from shiftsearch.index import IndexConfig, build_index

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def provider():
    return HashedNgramProvider(seed=13, dim=64)


@pytest.fixture(scope="session")
def small_bench():
    return generate_synthetic_corpus(7, 80, 6)


@pytest.fixture(scope="session")
def small_index(small_bench, provider):
    return build_index(
        small_bench.records, small_bench.dictionary, provider, IndexConfig()
    )
