from pathlib import Path

import pytest

from fedtone.embedding import StubBackend
from fedtone.tokenizer import stub_vocab

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_corpus_dir() -> Path:
    return FIXTURES / "corpus"


@pytest.fixture(scope="session")
def fixture_macro_csv() -> Path:
    return FIXTURES / "gdp_growth.csv"


@pytest.fixture(scope="session")
def vocab():
    return stub_vocab()


@pytest.fixture(scope="session")
def backend():
    return StubBackend(hidden_size=16, seed=0)
