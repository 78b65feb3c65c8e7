import pytest

from lexparse.grammar import Grammar
from lexparse.types import Domain, LexiconEntry


@pytest.fixture(scope="session")
def grammar():
    return Grammar.load()


def entry(key, value, domain=Domain.LTL, source="GOLD", seq=None):
    from lexparse.types import Source

    return LexiconEntry(key, value, domain, Source(source), seq)


@pytest.fixture
def make_entry():
    return entry
