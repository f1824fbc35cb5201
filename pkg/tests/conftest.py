import itertools

import numpy as np
import pytest

from markovtrie.markov import word_probability
from markovtrie.models import dyadic3, markov2, markov3, memoryless64, uniform2


@pytest.fixture(scope="session")
def u2():
    return uniform2()


@pytest.fixture(scope="session")
def m64():
    return memoryless64()


@pytest.fixture(scope="session")
def mk2():
    return markov2()


@pytest.fixture(scope="session")
def mk3():
    return markov3()


@pytest.fixture(scope="session")
def dy3():
    return dyadic3()


@pytest.fixture(scope="session")
def test_models(u2, m64, mk2, mk3):
    return [u2, m64, mk2, mk3]


def count_contained(text, w):
    k = len(w)
    return sum(1 for i in range(len(text) - k + 1) if tuple(text[i:i + k]) == tuple(w))


def brute_law(model, w, length):
    """P(O=0), P(O=1) for contained occurrences in texts of ``length`` symbols."""
    p0 = p1 = 0.0
    for text in itertools.product(range(model.m), repeat=length):
        c = count_contained(text, w)
        if c < 2:
            pr = word_probability(model, text)
            if c == 0:
                p0 += pr
            else:
                p1 += pr
    return p0, p1


def all_words(m, k):
    return [tuple(w) for w in itertools.product(range(m), repeat=k)]


def as_array(words):
    return np.array(words, dtype=np.int64)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
