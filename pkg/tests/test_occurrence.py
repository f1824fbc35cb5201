import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovtrie.markov import word_probability
from markovtrie.occurrence import (ResourceCapExceeded, build_automaton, dp_table,
                                   enumerate_distribution, exact_expected_suffix_size,
                                   failure_function, occurrence_distribution, pair_moment,
                                   prob_at_least_two, subtree_factor)
from markovtrie.words import CONTAINED, START, n0_n1_coeffs

from .conftest import all_words, as_array, count_contained


def test_uniform_examples(u2):
    d = occurrence_distribution(u2, "00", 2)
    assert d.p(0) == pytest.approx(0.75, abs=1e-15)
    assert d.p(1) == pytest.approx(0.25, abs=1e-15)
    d = occurrence_distribution(u2, "00", 3)
    assert d.p(0) == pytest.approx(5 / 8, abs=1e-15)
    assert d.tail == pytest.approx(1 / 8, abs=1e-15)
    assert prob_at_least_two(u2, "00", 3) == pytest.approx(1 / 8, abs=1e-15)
    assert prob_at_least_two(u2, "01", 3) == 0.0
    assert prob_at_least_two(u2, "01", 4) == pytest.approx(1 / 16, abs=1e-15)


def test_trivial_lengths(mk2):
    for n in range(0, 3):
        d = occurrence_distribution(mk2, "011", n)
        np.testing.assert_allclose(d.probs, [1, 0, 0], atol=1e-15)
    d = occurrence_distribution(mk2, "0", 0, convention=START)
    np.testing.assert_allclose(d.probs, [1, 0, 0])


def test_bad_arguments(mk2):
    with pytest.raises(ValueError):
        occurrence_distribution(mk2, "", 3)
    with pytest.raises(ValueError):
        occurrence_distribution(mk2, "0", 3, r_cap=1)
    with pytest.raises(ValueError):
        occurrence_distribution(mk2, "0", 3, convention="middle")
    with pytest.raises(ValueError):
        occurrence_distribution(mk2, "0", -1)
    d = occurrence_distribution(mk2, "0", 3, r_cap=3)
    with pytest.raises(ValueError):
        d.p(3)


@pytest.mark.parametrize("name", ["u2", "mk2"])
@pytest.mark.parametrize("conv", [CONTAINED, START])
def test_dp_matches_enumeration(name, conv, request):
    model = request.getfixturevalue(name)
    for k in (1, 2, 3, 4):
        words = all_words(2, k)
        # start convention needs n + k - 1 symbols; keep enumeration small
        n_hi = 12 if conv == CONTAINED else 12 - k + 1
        table = dp_table(model, as_array(words), n_hi, 3, conv)
        for i, w in enumerate(words):
            for n in (0, 1, 3, n_hi):
                want = enumerate_distribution(model, w, n, conv, r_cap=3)
                np.testing.assert_allclose(table[i, n], want, atol=1e-12)


def test_dp_ternary_enumeration(mk3):
    for w in [(0,), (1, 1), (0, 2, 0), (2, 1, 2, 1)]:
        for n in (4, 7):
            got = occurrence_distribution(mk3, w, n, 3).probs
            np.testing.assert_allclose(got, enumerate_distribution(mk3, w, n, r_cap=3),
                                       atol=1e-12)


def test_dp_agrees_with_generating_functions(mk3):
    words = all_words(3, 3)
    table = dp_table(mk3, as_array(words), 50)
    for i, w in enumerate(words):
        n0, n1 = n0_n1_coeffs(mk3, w, 50)
        np.testing.assert_allclose(table[i, :, 0], n0, atol=1e-12)
        np.testing.assert_allclose(table[i, :, 1], n1, atol=1e-12)


def test_laws_are_distributions_and_monotone(mk3):
    table = dp_table(mk3, as_array(all_words(3, 2)), 40, 4)
    np.testing.assert_allclose(table.sum(axis=2), 1.0, atol=1e-12)
    assert np.all(table >= -1e-15)
    assert np.all(np.diff(table[:, :, 0], axis=1) <= 1e-15)
    assert np.all(np.diff(table[:, :, -1], axis=1) >= -1e-15)


def test_start_shift(mk2):
    w = "0110"
    for n in range(1, 12):
        a = occurrence_distribution(mk2, w, n, convention=START).probs
        b = occurrence_distribution(mk2, w, n + 3, convention=CONTAINED).probs
        np.testing.assert_allclose(a, b, atol=1e-15)


# -- automaton ------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=7),
       st.lists(st.integers(0, 2), min_size=0, max_size=40))
def test_automaton_counts_occurrences(w, text):
    aut = build_automaton(w, 3)
    state = hits = 0
    for a in text:
        state = aut.delta[state, a]
        hits += state == aut.k
    assert hits == count_contained(text, w)


def test_failure_function_example():
    assert failure_function((0, 1, 0, 1, 1)) == [0, 0, 0, 1, 2, 0]
    with pytest.raises(ValueError):
        build_automaton((), 2)


# -- pair moment and the suffix-size sum -------------------------------------------

def test_pair_moment_by_enumeration(mk2):
    n = 6
    for w in all_words(2, 3):
        k = len(w)
        want = 0.0
        for text in itertools.product(range(2), repeat=n + k - 1):
            c = count_contained(text, w)
            want += word_probability(mk2, text) * c * (c - 1) / 2
        got = pair_moment(mk2, as_array([w]), n)[0]
        assert got == pytest.approx(want, abs=1e-13)


def test_subtree_factor_uniform(u2, mk2):
    assert subtree_factor(u2) == pytest.approx(1.0)
    assert subtree_factor(mk2) > 0


@pytest.mark.parametrize("n, value", [(2, 2.0), (3, 3.0), (4, 4.25)])
def test_suffix_size_uniform_values(u2, n, value):
    est = exact_expected_suffix_size(u2, n, tol=1e-6)
    assert abs(est.value - value) <= est.tail_bound + 1e-9
    assert est.tail_bound < 1e-4


def test_suffix_size_small_n(mk2):
    assert exact_expected_suffix_size(mk2, 0).value == 0.0
    assert exact_expected_suffix_size(mk2, 1).value == 0.0
    with pytest.raises(ValueError):
        exact_expected_suffix_size(mk2, 5, len_cap=3)


@pytest.mark.parametrize("name, n, depth", [("u2", 3, 6), ("mk2", 4, 5), ("mk3", 3, 4)])
def test_truncated_suffix_sum_by_enumeration(name, n, depth, request):
    model = request.getfixturevalue(name)
    want = 1.0
    for text in itertools.product(range(model.m), repeat=n + depth - 1):
        pr = word_probability(model, text)
        for length in range(1, depth + 1):
            starts = {tuple(text[i:i + length]) for i in range(n)}
            want += pr * sum(1 for s in starts
                             if sum(tuple(text[i:i + length]) == s for i in range(n)) >= 2)
    est = exact_expected_suffix_size(model, n, len_cap=depth, tol=0.0)
    assert est.value == pytest.approx(want, abs=1e-12)


def test_tail_bound_covers_truncation(mk2):
    full = exact_expected_suffix_size(mk2, 6, tol=1e-8)
    rough = exact_expected_suffix_size(mk2, 6, tol=1e-2)
    assert abs(full.value - rough.value) <= rough.tail_bound + full.tail_bound
    assert rough.nodes <= full.nodes


def test_node_cap(mk2):
    with pytest.raises(ResourceCapExceeded):
        exact_expected_suffix_size(mk2, 30, node_cap=50)
