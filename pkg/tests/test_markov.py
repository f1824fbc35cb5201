import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovtrie.markov import (Alphabet, MarkovStream, ModelError, alpha_table, chain_period,
                               classify_periodicity, dump_model, entropy_rate, generate,
                               generate_many, load_model, max_path_probability, memoryless,
                               new_model, rational_ratio, spectral, word_probability)
from markovtrie.models import BUILTIN, resolve


def test_uniform_stationary(u2):
    np.testing.assert_allclose(u2.stationary, [0.5, 0.5])


def test_markov2_stationary(mk2):
    np.testing.assert_allclose(mk2.stationary, [4 / 7, 3 / 7], atol=1e-15)


def test_identity_matrix_is_reducible():
    with pytest.raises(ModelError, match="reducible"):
        new_model([[1, 0], [0, 1]])


def test_periodic_chain_rejected():
    with pytest.raises(ModelError, match="periodic"):
        new_model([[0, 1], [1, 0]])


@pytest.mark.parametrize("mat, msg", [
    ([[0.5, 0.6], [0.5, 0.5]], "stochastic"),
    ([[1.5, -0.5], [0.5, 0.5]], "negative"),
    ([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0]], "square"),
])
def test_bad_matrices(mat, msg):
    with pytest.raises(ModelError, match=msg):
        new_model(mat)


def test_alphabet_rules():
    with pytest.raises(ModelError):
        Alphabet(("a",))
    with pytest.raises(ModelError):
        Alphabet(("a", "a"))
    with pytest.raises(ModelError, match="alphabet"):
        new_model([[0.5, 0.5], [0.5, 0.5]], alphabet="abc")


def test_zero_entries_allowed_when_ergodic():
    m = new_model([[0.0, 1.0], [0.5, 0.5]])
    np.testing.assert_allclose(m.stationary @ m.transition, m.stationary, atol=1e-12)
    assert chain_period(m.transition > 0) == 1


def test_model_is_read_only(mk2):
    with pytest.raises(ValueError):
        mk2.transition[0, 0] = 0.1


def test_word_probability(u2, mk2):
    assert word_probability(u2, "00") == 0.25
    assert word_probability(mk2, "01") == pytest.approx(4 / 7 * 0.3, abs=1e-15)
    assert word_probability(mk2, "") == 1.0
    with pytest.raises(ModelError):
        word_probability(mk2, "02")


def test_encode_labels(mk3):
    assert mk3.encode("cab") == (2, 0, 1)
    assert mk3.encode([2, 0]) == (2, 0)
    assert mk3.decode((1, 2)) == "bc"


def test_generate_basic(u2):
    assert generate(u2, 3, 0).size == 0
    a = generate(u2, 11, 500)
    assert np.array_equal(a, generate(u2, 11, 500))
    x = generate(u2, 5, 100_000)
    assert abs(x.mean() - 0.5) < 0.01


def test_stream_prefix_matches_batch(mk3):
    s = MarkovStream(mk3, 42, chunk=7)
    s.extend(5)
    s.ensure(300)
    assert s[299] == s.symbols[299]
    assert np.array_equal(np.array(s.symbols[:300]), generate(mk3, 42, 300))


def test_stream_transition_frequencies(mk2):
    x = generate(mk2, 1, 200_000)
    after0 = x[1:][x[:-1] == 0]
    assert abs(np.mean(after0 == 1) - 0.3) < 0.01
    assert abs(np.mean(x == 0) - 4 / 7) < 0.01


def test_generate_many_continues_paths(mk2):
    rng = np.random.default_rng(0)
    a = generate_many(mk2, rng, 20_000, 4)
    b = generate_many(mk2, rng, 20_000, 1, prev=a[:, -1])
    first0 = b[a[:, -1] == 0, 0]
    assert abs(np.mean(first0 == 0) - 0.7) < 0.02


def test_disjoint_seeds_look_independent(u2):
    # chi-square on the joint table of two streams
    a = generate(u2, 100, 20_000)
    b = generate(u2, 101, 20_000)
    table = np.histogram2d(a, b, bins=2)[0]
    expected = table.sum() / 4
    chi2 = float(((table - expected) ** 2 / expected).sum())
    assert chi2 < 10.8  # 0.1% point, 1 dof


def test_entropy_values(u2, mk2, m64):
    assert entropy_rate(u2) == pytest.approx(math.log(2), abs=1e-15)

    def hb(p):
        return -p * math.log(p) - (1 - p) * math.log(1 - p)

    assert entropy_rate(mk2) == pytest.approx(4 / 7 * hb(0.7) + 3 / 7 * hb(0.6), abs=1e-14)
    assert entropy_rate(mk2) == pytest.approx(0.63750, abs=1e-5)
    assert entropy_rate(m64) == pytest.approx(hb(0.6), abs=1e-15)


def test_entropy_with_deterministic_row():
    m = new_model([[0.0, 1.0], [0.5, 0.5]])
    pi = m.stationary
    assert entropy_rate(m) == pytest.approx(pi[1] * math.log(2), abs=1e-15)


def test_spectral(m64, mk2, mk3):
    assert spectral(m64).lambda1_modulus == 0.0
    np.testing.assert_allclose(spectral(m64).rmat, 0, atol=1e-15)
    assert spectral(mk2).lambda1_modulus == pytest.approx(0.3, abs=1e-14)
    for model in (mk2, mk3):
        sd = spectral(model)
        assert np.abs(sd.rmat @ sd.dmat).max() < 1e-10
        assert np.abs(sd.dmat @ sd.rmat).max() < 1e-10
        for k in range(1, 31):
            pk = np.linalg.matrix_power(model.transition, k)
            assert np.abs(pk - sd.dmat - sd.rpow(k)).max() < 1e-10


def test_rpow_decay_constant(mk3):
    sd = spectral(mk3)
    lam = sd.lambda1_modulus
    consts = [np.linalg.norm(sd.rpow(k), 2) / lam**k for k in range(1, 31)]
    assert max(consts) < 10


def test_max_path_probability(mk2):
    assert max_path_probability(mk2, 0) == 1.0
    assert max_path_probability(mk2, 1) == 0.7
    assert max_path_probability(mk2, 3) == pytest.approx(0.7**3)


def test_periodicity_classes(u2, m64, mk2, mk3, dy3):
    rep = classify_periodicity(u2)
    assert rep.periodic and rep.common_measure == pytest.approx(math.log(2))
    assert all(v == pytest.approx(-math.log(2)) for v in rep.alphas.values())
    rep = classify_periodicity(dy3)
    assert rep.periodic and rep.common_measure == pytest.approx(math.log(2))
    for model in (m64, mk2, mk3):
        rep = classify_periodicity(model)
        assert rep.classification == "Aperiodic" and rep.common_measure is None
        assert rep.remark_consistent


def test_memoryless_alpha_reduces(m64):
    for (a, b, c), v in alpha_table(m64).items():
        assert v == pytest.approx(math.log(m64.stationary[a]), abs=1e-14)


def test_rational_ratio_tolerance_scales():
    assert rational_ratio(0.5, 10**6, 1e-9) == 0.5
    assert rational_ratio(math.log(0.6) / math.log(0.4), 10**6, 1e-9) is None


def test_model_file_round_trip(tmp_path, mk3):
    path = tmp_path / "m.json"
    path.write_text(dump_model(mk3))
    back = load_model(path)
    np.testing.assert_array_equal(back.transition, mk3.transition)
    assert back.alphabet == mk3.alphabet


def test_model_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ModelError, match="JSON"):
        load_model(bad)
    bad.write_text(json.dumps({"alphabet": ["0", "1"]}))
    with pytest.raises(ModelError, match="transition"):
        load_model(bad)
    with pytest.raises(ModelError):
        load_model(tmp_path / "missing.json")
    with pytest.raises(ModelError):
        resolve("no-such-model")


def test_builtins_resolve():
    for name in BUILTIN:
        assert resolve(name).name == name


stochastic_rows = st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3)


@settings(max_examples=40, deadline=None)
@given(st.lists(stochastic_rows, min_size=3, max_size=3))
def test_random_positive_models(rows):
    p = np.array(rows)
    p /= p.sum(axis=1, keepdims=True)
    m = new_model(p)
    assert abs(m.stationary.sum() - 1) < 1e-12
    assert np.abs(m.stationary @ m.transition - m.stationary).max() < 1e-12
    assert entropy_rate(m) > 0
    sd = spectral(m)
    assert np.abs(sd.rmat @ sd.dmat).max() < 1e-10
