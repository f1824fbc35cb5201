"""Exact occurrence-count distributions by dynamic programming.

The text is run through the KMP automaton of the pattern while the chain
state (last symbol) and a capped occurrence counter are tracked. This is
independent of the generating-function route in :mod:`markovtrie.words`
and serves as its oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .markov import MarkovModel, max_path_probability, word_probability
from .words import CONTAINED, START, _check_convention, batch_word_data


class ResourceCapExceeded(RuntimeError):
    """The word tree grew beyond the node cap; retry with a smaller n."""


@dataclass(frozen=True)
class PatternAutomaton:
    word: tuple[int, ...]
    delta: np.ndarray  # (k+1, m): next matched-prefix length

    @property
    def k(self) -> int:
        return len(self.word)


def failure_function(w) -> list[int]:
    k = len(w)
    fail = [0] * (k + 1)
    j = 0
    for i in range(1, k):
        while j and w[i] != w[j]:
            j = fail[j]
        if w[i] == w[j]:
            j += 1
        fail[i + 1] = j
    return fail


def build_automaton(w, m: int) -> PatternAutomaton:
    w = tuple(w)
    if not w:
        raise ValueError("pattern must be non-empty")
    k = len(w)
    fail = failure_function(w)
    delta = np.zeros((k + 1, m), dtype=np.int64)
    for j in range(k + 1):
        for a in range(m):
            if j < k and w[j] == a:
                delta[j, a] = j + 1
            elif j == 0:
                delta[j, a] = 0
            else:
                # from a full match continue through the failure link: overlaps count
                delta[j, a] = delta[fail[j], a]
    return PatternAutomaton(w, delta)


@dataclass(frozen=True)
class OccurrenceDistribution:
    n: int
    probs: np.ndarray  # P(O = r) for r < r_cap ... last entry is P(O >= r_cap)
    convention: str

    @property
    def r_cap(self) -> int:
        return len(self.probs) - 1

    def p(self, r: int) -> float:
        if r >= self.r_cap:
            raise ValueError("count at or above the cap is aggregated into the tail")
        return float(self.probs[r])

    @property
    def tail(self) -> float:
        return float(self.probs[-1])


def occurrence_distribution(model: MarkovModel, w, n: int, r_cap: int = 2,
                            convention: str = CONTAINED) -> OccurrenceDistribution:
    """Exact law of O_n(w), counts >= r_cap lumped into the last entry."""
    _check_convention(convention)
    w = model.encode(w)
    if not w:
        raise ValueError("pattern must be non-empty")
    if n < 0 or r_cap < 2:
        raise ValueError("need n >= 0 and r_cap >= 2")
    probs = _batch_dp(model, np.array([w]), n, r_cap, convention)[0]
    return OccurrenceDistribution(n, probs, convention)


def dp_table(model: MarkovModel, words: np.ndarray, n_max: int, r_cap: int = 2,
             convention: str = CONTAINED) -> np.ndarray:
    """Occurrence laws for every row of ``words`` and every n in 0..n_max.

    Returns shape (W, n_max + 1, r_cap + 1). State per word: (matched prefix,
    last symbol, count capped at r_cap). Start-position counts at n equal
    contained counts in the first n + k - 1 symbols.
    """
    _check_convention(convention)
    words = np.asarray(words)
    wcount, k = words.shape
    m = model.m
    shift = k - 1 if convention == START else 0
    steps = n_max + shift if n_max > 0 else 0
    r1 = r_cap + 1
    contained = np.zeros((wcount, steps + 1, r1))
    contained[:, 0, 0] = 1.0
    if steps:
        delta = np.stack([build_automaton(w, m).delta for w in words.tolist()])
        ns = k + 1
        p = model.transition
        mass = np.zeros((wcount, ns, m, r1))
        base = np.arange(wcount)[:, None] * ns
        for a in range(m):
            j1 = delta[:, 0, a]
            mass[np.arange(wcount), j1, a, (j1 == k).astype(np.int64)] += model.stationary[a]
        contained[:, 1] = mass.sum(axis=(1, 2))
        for t in range(2, steps + 1):
            new = np.zeros((wcount * ns * m * r1,))
            for a in range(m):
                contrib = np.einsum("wjcr,c->wjr", mass, p[:, a])  # (W, ns, r1)
                jn = delta[:, :, a]                                   # (W, ns)
                acc = (jn == k).astype(np.int64)
                rr = np.minimum(np.arange(r1)[None, None, :] + acc[:, :, None], r_cap)
                idx = (((base + jn)[:, :, None] * m + a) * r1 + rr).ravel()
                new += np.bincount(idx, weights=contrib.ravel(), minlength=new.size)
            mass = new.reshape(wcount, ns, m, r1)
            contained[:, t] = mass.sum(axis=(1, 2))
    if not shift:
        return contained[:, :n_max + 1]
    out = np.empty((wcount, n_max + 1, r1))
    out[:, 0] = contained[:, 0]
    out[:, 1:] = contained[:, 1 + shift:]
    return out


def _batch_dp(model: MarkovModel, words: np.ndarray, n: int, r_cap: int,
              convention: str) -> np.ndarray:
    """Occurrence laws at a single n for every row of ``words`` (equal lengths)."""
    return dp_table(model, words, n, r_cap, convention)[:, n]


def prob_at_least_two(model: MarkovModel, w, n: int, convention: str = CONTAINED) -> float:
    d = occurrence_distribution(model, w, n, 2, convention)
    return float(min(1.0, max(0.0, 1.0 - d.probs[0] - d.probs[1])))


def pair_moment(model: MarkovModel, words: np.ndarray, n: int,
                prob=None, s=None) -> np.ndarray:
    """E[C(O_n(w), 2)] under the start-position convention, for each row.

    Sum over start pairs (i, i+d): overlapping pairs are weighted by the
    autocorrelation coefficient, disjoint ones by P(w)^2 [P^(d-k+1)]_{b,a}/pi_a.
    """
    words = np.asarray(words)
    wcount, k = words.shape
    if prob is None or s is None:
        prob, s = batch_word_data(model, words)
    total = np.zeros(wcount)
    first, last = words[:, 0], words[:, -1]
    pw = np.eye(model.m)
    for d in range(1, n):
        pairs = n - d
        if d < k:
            total += pairs * prob * s[:, d]
        else:
            if d == k:
                pw = model.transition.copy()
            else:
                pw = pw @ model.transition
            total += pairs * prob**2 * pw[last, first] / model.stationary[first]
    return total


def subtree_factor(model: MarkovModel) -> float:
    """Upper bound on sum_{l>=1} of the max probability of matching l more symbols."""
    block = 1
    while max_path_probability(model, block) >= 1.0:
        block += 1
        if block > 4 * model.m:
            raise ValueError("source has a deterministic cycle")
    c = [max_path_probability(model, l) for l in range(1, block + 1)]
    return sum(c) / (1.0 - c[-1])


@dataclass(frozen=True)
class SuffixSizeEstimate:
    value: float
    tail_bound: float
    nodes: int


def exact_expected_suffix_size(model: MarkovModel, n: int, len_cap: int | None = None,
                               convention: str = START, tol: float = 1e-3,
                               node_cap: int = 2_000_000) -> SuffixSizeEstimate:
    """Sum of P(O_n(w) >= 2) over the word tree, with a bound on what was cut.

    A subtree under ``w`` is skipped once its descendants' mass, bounded by
    E[C(O_n(w), 2)] times :func:`subtree_factor`, drops below ``tol * P(w)``;
    the skipped bounds add up to at most ``tol``. The root (empty word) counts
    whenever n >= 2.
    """
    _check_convention(convention)
    if len_cap is None:
        len_cap = max(n, 1) + 64
    if len_cap < n:
        raise ValueError("len_cap must be at least n")
    if n < 2:
        return SuffixSizeEstimate(0.0, 0.0, 1)
    factor = subtree_factor(model)
    m = model.m
    value = 1.0
    bound = 0.0
    nodes = 1
    live = np.arange(m).reshape(m, 1)
    for depth in range(1, len_cap + 1):
        if live.shape[0] == 0:
            break
        nodes += live.shape[0]
        if nodes > node_cap:
            raise ResourceCapExceeded(f"word tree exceeded {node_cap} nodes at depth {depth}")
        prob, s = batch_word_data(model, live)
        keep = prob > 0
        live, prob, s = live[keep], prob[keep], s[keep]
        dist = np.concatenate([_batch_dp(model, chunk, n, 2, convention)
                               for chunk in np.array_split(live, max(1, len(live) // 4096 + 1))])
        p2 = np.clip(1.0 - dist[:, 0] - dist[:, 1], 0.0, 1.0)
        value += float(p2.sum())
        below = pair_moment(model, live, n, prob, s) * factor
        cut = (below < tol * prob) | (p2 <= 1e-15)
        if depth == len_cap:
            cut[:] = True
        bound += float(below[cut].sum())
        grow = live[~cut]
        if grow.shape[0] == 0:
            break
        live = np.concatenate([np.repeat(grow, m, axis=0),
                               np.tile(np.arange(m), grow.shape[0])[:, None]], axis=1)
    return SuffixSizeEstimate(value, bound, nodes)


def enumerate_distribution(model: MarkovModel, w, n: int, convention: str = CONTAINED,
                           r_cap: int = 2) -> np.ndarray:
    """Brute-force law over all m^L texts; for checking small cases only."""
    import itertools

    w = model.encode(w)
    k = len(w)
    length = n + k - 1 if convention == START and n > 0 else n
    out = np.zeros(r_cap + 1)
    for text in itertools.product(range(model.m), repeat=length):
        pr = word_probability(model, text)
        c = sum(1 for i in range(length - k + 1) if text[i:i + k] == w)
        out[min(c, r_cap)] += pr
    return out
