import random

import pytest

from termorder.index import build_index
from termorder.text import Document

ACCEPTANCE_LINES = []


def index_of(*docs):
    """Index over documents given as lists of small integer term ids."""
    return build_index([Document(f"d{i}", list(d)) for i, d in enumerate(docs)])


def random_docs(rng, n_docs, max_len, vocab_size):
    return [[rng.randrange(vocab_size) for _ in range(rng.randint(1, max_len))] for _ in range(n_docs)]


@pytest.fixture
def rng():
    return random.Random(20240607)


@pytest.fixture
def record_criterion():
    def record(number, name, passed, detail="", status=None):
        status = status or ("PASS" if passed else "FAIL")
        ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {name}"
                                + (f" ({detail})" if detail else ""))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
