import math

import numpy as np
import pytest

from markovtrie.markov import entropy_rate, new_model
from markovtrie.seeding import derive_seed
from markovtrie.trees import trie_size_sample
from markovtrie.triesize import (SingularSystem, asymptotic_leading, dominant_eigenvalue,
                                 mellin_diagnostics, p_of_s, shared_prob, tn_recurrence,
                                 tn_wordsum)


def test_uniform_anchors(u2):
    t = tn_recurrence(u2, 3).t
    assert t[0] == t[1] == 0.0
    assert t[2] == pytest.approx(2.0, abs=1e-14)
    assert t[3] == pytest.approx(10 / 3, abs=1e-14)


def test_conditioned_table(u2, mk2):
    tab = tn_recurrence(u2, 10)
    assert tab.N == 10
    assert tab.t_cond[:, :2].max() == 0.0
    np.testing.assert_allclose(tab.t_cond[:, 2], 2.0)
    t = tn_recurrence(mk2, 300).t
    assert np.all(np.diff(t) >= 0)
    assert np.all(t[2:] / np.arange(2, 301) < 3)
    with pytest.raises(ValueError):
        tn_recurrence(mk2, 1)


def test_wordsum_anchors(u2, mk2):
    r = tn_wordsum(u2, 2)
    assert abs(r.value - 2.0) <= r.bound + 1e-12
    r = tn_wordsum(u2, 3)
    assert abs(r.value - 10 / 3) <= r.bound + 1e-12
    assert tn_wordsum(mk2, 1).value == 0.0
    assert tn_wordsum(mk2, 0).value == 0.0
    with pytest.raises(ValueError):
        tn_wordsum(mk2, 5, tol=0)


@pytest.mark.parametrize("name", ["u2", "m64", "mk2", "mk3", "dy3"])
def test_wordsum_matches_recurrence(name, request):
    model = request.getfixturevalue(name)
    t = tn_recurrence(model, 64).t
    for n in (2, 5, 17, 33, 64):
        r = tn_wordsum(model, n)
        assert r.bound < 1e-6
        assert abs(r.value - t[n]) <= r.bound


def test_shared_prob():
    np.testing.assert_allclose(shared_prob(3, [0.0, 1.0, 0.5]), [0.0, 1.0, 0.5])
    assert shared_prob(1, 0.3) == 0.0
    x = 1e-9
    assert shared_prob(1000, x) == pytest.approx(1000 * 999 / 2 * x**2, rel=1e-5)


def test_leading_term_examples(u2, m64):
    assert asymptotic_leading(u2, 1024) == pytest.approx(1477.3, abs=0.05)
    assert entropy_rate(m64) == pytest.approx(0.67301, abs=1e-5)
    assert asymptotic_leading(m64, 1000) == pytest.approx(1485.9, abs=0.05)
    with pytest.raises(ValueError):
        asymptotic_leading(u2, 0)


@pytest.mark.slow
def test_ratio_approaches_one(u2, mk2):
    grid = [2**j for j in range(8, 13)]
    for model, lo in ((mk2, 0.9), (u2, 0.95)):
        t = tn_recurrence(model, grid[-1]).t
        ratios = [t[n] / asymptotic_leading(model, n) for n in grid]
        assert lo <= ratios[-1] <= 2 - lo
        assert all(abs(b - 1) <= abs(a - 1) for a, b in zip(ratios, ratios[1:]))


@pytest.mark.parametrize("n", [4, 16, 64, 256])
def test_monte_carlo_consistency(mk2, n):
    t = tn_recurrence(mk2, n).t[n]
    x = np.array([trie_size_sample(mk2, n, derive_seed(17, n, i)).internal_nodes
                  for i in range(2000)], dtype=float)
    assert abs(x.mean() - t) <= 4 * x.std(ddof=1) / math.sqrt(x.size)


def test_singular_system_message():
    err = SingularSystem(7, 1e17)
    assert err.n == 7 and "n=7" in str(err)


# -- Mellin side --------------------------------------------------------------

def test_lambda_at_minus_one(test_models):
    for model in test_models:
        assert dominant_eigenvalue(model, -1.0) == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(p_of_s(model, -1.0), model.transition, atol=1e-15)


def test_zero_entries_stay_zero():
    m = new_model([[0.0, 1.0], [0.5, 0.5]])
    assert p_of_s(m, 2.0 + 1j)[0, 0] == 0
    assert abs(p_of_s(m, 2.0 + 1j)[0, 1]) == 1.0


def test_uniform_roots_are_regular(u2):
    diag = mellin_diagnostics(u2)
    spacing = 2 * math.pi / math.log(2)
    assert diag.predicted_spacing == pytest.approx(spacing, rel=1e-12)
    assert len(diag.extra_roots) == 8
    for r in diag.extra_roots:
        j = round(r / spacing)
        assert j != 0 and abs(r - j * spacing) <= diag.grid
    assert diag.aligned()
    assert abs(diag.lambda_at(spacing) - 1) < 1e-8


def test_aperiodic_models_have_no_roots(mk2, mk3):
    for model in (mk2, mk3):
        diag = mellin_diagnostics(model)
        assert diag.extra_roots == []
        assert diag.predicted_spacing is None
        assert diag.aligned()


def test_bad_scan_window(u2):
    with pytest.raises(ValueError):
        mellin_diagnostics(u2, scan_range=(3, 3))
