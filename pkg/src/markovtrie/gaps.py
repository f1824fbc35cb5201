"""Gap between suffix trees and tries, word by word and on average.

With start-position counts, s_n - t_n = -sum_w (d_n(w) + q_n(w)). The word
sums here walk the word tree and bound whatever they skip; the Monte Carlo
experiment compares sampled suffix-tree sizes with exact trie sizes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .markov import MarkovModel
from .occurrence import _batch_dp, pair_moment, subtree_factor
from .seeding import derive_seed
from .trees import suffix_tree_size_sample
from .triesize import _resolvent_rows, tn_recurrence
from .words import (EXACT_MAX_M, START, _check_convention, batch_occurrence_probs,
                    batch_word_data)


def batch_in_Bk(words: np.ndarray) -> np.ndarray:
    """Row-wise: no self-overlap longer than half the length."""
    wcount, k = words.shape
    ok = np.ones(wcount, dtype=bool)
    for d in range(1, k):
        if k - d > k / 2:
            ok &= ~np.all(words[:, d:] == words[:, :k - d], axis=1)
    return ok


def _occurrence_pair(model: MarkovModel, words: np.ndarray, n: int, convention: str):
    if model.m <= EXACT_MAX_M:
        n0, n1, _ = batch_occurrence_probs(model, words, n, convention)
        return n0, n1
    dist = _batch_dp(model, words, n, 2, convention)
    return dist[:, 0], dist[:, 1]


@dataclass(frozen=True, eq=False)
class GapSums:
    """Sums of d_n and q_n over the visited words, split by B_k membership.

    ``by_length`` rows: k, d over B_k, d over A^k - B_k, q over B_k, q over the rest.
    ``d_bound`` and ``q_bound`` bound the contribution of skipped words.
    """

    n: int
    by_length: np.ndarray
    d_bound: float
    q_bound: float
    nodes: int

    @property
    def d_total(self) -> float:
        return float(self.by_length[:, 1:3].sum())

    @property
    def q_total(self) -> float:
        return float(self.by_length[:, 3:5].sum())

    @property
    def d_Bk(self) -> float:
        return float(self.by_length[:, 1].sum())

    @property
    def d_rest(self) -> float:
        return float(self.by_length[:, 2].sum())


def word_gap_sums(model: MarkovModel, n: int, len_cap: int | None = None, tol: float = 0.05,
                  convention: str = START, node_cap: int = 4_000_000,
                  chunk: int = 1 << 16) -> GapSums:
    """Sum d_n(w) and q_n(w) over the word tree up to length ``len_cap``.

    Below w the descendants satisfy sum |d| <= E[C(O_n(w),2)] c + C(n,2) P(w)^2 h,
    where c sums the largest path probabilities (a common extension of two
    occurrences follows a path fixed by the past) and h = sum_v P(v|b)^2;
    |q| obeys twice that. A subtree is skipped once the bound is under
    ``tol * P(w)``, so skipped mass stays below ``tol`` for d and ``2 tol`` for q,
    plus whatever is cut at ``len_cap``. Only the start convention converges:
    a contained count gives d_n(w) = 1 - (1-P(w))^n for every |w| > n.
    """
    _check_convention(convention)
    if convention != START:
        raise ValueError("word sums diverge under the contained convention; use start")
    if n < 0:
        raise ValueError("n must be non-negative")
    if len_cap is None:
        len_cap = n + 8
    m = model.m
    if n == 0:
        return GapSums(0, np.zeros((0, 5)), 0.0, 0.0, 0)
    factor = subtree_factor(model)
    h2 = _resolvent_rows(model, 2)[2]
    pairs = n * (n - 1) / 2
    rows = []
    bound = 0.0
    nodes = 0
    live = np.arange(m).reshape(m, 1)
    for depth in range(1, len_cap + 1):
        if live.shape[0] == 0:
            break
        nodes += live.shape[0]
        if nodes > node_cap:
            raise RuntimeError(f"word tree exceeded {node_cap} nodes at depth {depth}")
        acc = np.zeros(4)
        grow = []
        for part in np.array_split(live, max(1, -(-live.shape[0] // chunk))):
            n0, n1 = _occurrence_pair(model, part, n, convention)
            prob, s = batch_word_data(model, part)
            q = 1.0 - prob
            d = n0 - q**n
            qq = n1 - n * prob * q ** (n - 1)
            inb = batch_in_Bk(part)
            acc += [d[inb].sum(), d[~inb].sum(), qq[inb].sum(), qq[~inb].sum()]
            below = pair_moment(model, part, n, prob, s) * factor \
                + pairs * prob**2 * h2[part[:, -1]]
            cut = below < tol * prob
            if depth == len_cap:
                cut[:] = True
            bound += float(below[cut].sum())
            grow.append(part[~cut & (prob > 0)])
        rows.append([depth, *acc])
        grow = np.concatenate(grow)
        if grow.shape[0] == 0:
            break
        live = np.concatenate([np.repeat(grow, m, axis=0),
                               np.tile(np.arange(m), grow.shape[0])[:, None]], axis=1)
    return GapSums(n, np.array(rows), bound, 2 * bound, nodes)


def qn_sum(model: MarkovModel, n: int, len_cap: int | None = None, tol: float = 0.05):
    """(sum of q_n(w), bound on the skipped part)."""
    g = word_gap_sums(model, n, len_cap, tol)
    return g.q_total, g.q_bound


def dn_sum(model: MarkovModel, n: int, len_cap: int | None = None, tol: float = 0.05):
    """(sum over B_k words, sum over the other words, bound on the skipped part)."""
    g = word_gap_sums(model, n, len_cap, tol)
    return g.d_Bk, g.d_rest, g.d_bound


# -- Monte Carlo comparison ----------------------------------------------------

def _suffix_sizes(args) -> list[int]:
    model, n, seeds = args
    return [suffix_tree_size_sample(model, n, s).internal_nodes for s in seeds]


def sample_suffix_sizes(model: MarkovModel, n: int, samples: int, seed: int,
                        stream: int = 0, workers: int = 1) -> np.ndarray:
    """Suffix-tree sizes for per-sample seeds derive_seed(seed, stream, i)."""
    seeds = [derive_seed(seed, stream, i) for i in range(samples)]
    if workers <= 1 or samples < 2 * workers:
        return np.array(_suffix_sizes((model, n, seeds)), dtype=float)
    parts = [seeds[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(workers) as ex:
        res = list(ex.map(_suffix_sizes, [(model, n, p) for p in parts]))
    out = np.empty(samples)
    for i, r in enumerate(res):
        out[i::workers] = r
    return out


@dataclass(frozen=True, eq=False)
class ExponentFit:
    slope: float | None
    ci: tuple | None
    points: int
    status: str   # "fitted", "below noise floor", "too few points"

    @property
    def sublinear(self) -> bool:
        if self.status == "below noise floor":
            return True
        return self.ci is not None and self.ci[1] < 1.0


@dataclass(frozen=True, eq=False)
class GapReport:
    n_grid: np.ndarray
    s_hat: np.ndarray
    s_stderr: np.ndarray
    t_exact: np.ndarray
    samples: int
    fit: ExponentFit = field(default=None)

    @property
    def gap(self) -> np.ndarray:
        return self.s_hat - self.t_exact

    @property
    def significant(self) -> np.ndarray:
        return np.abs(self.gap) > 3 * self.s_stderr


def fit_exponent(n_grid, gap, stderr, level: float = 0.95) -> ExponentFit:
    """Least squares of log|gap| on log n over points clear of the noise."""
    n_grid, gap, stderr = map(np.asarray, (n_grid, gap, stderr))
    sig = np.abs(gap) > 3 * stderr
    k = int(sig.sum())
    if k == 0:
        return ExponentFit(None, None, 0, "below noise floor")
    if k < 3:
        return ExponentFit(None, None, k, "too few points")
    x, y = np.log(n_grid[sig]), np.log(np.abs(gap[sig]))
    r = stats.linregress(x, y)
    half = stats.t.ppf(0.5 + level / 2, k - 2) * r.stderr
    return ExponentFit(float(r.slope), (float(r.slope - half), float(r.slope + half)), k,
                       "fitted")


def gap_experiment(model: MarkovModel, n_grid, samples: int, seed: int,
                   workers: int = 1) -> GapReport:
    n_grid = np.asarray(list(n_grid), dtype=int)
    if n_grid.size == 0 or np.any(np.diff(n_grid) <= 0):
        raise ValueError("n_grid must be non-empty and ascending")
    if samples < 100:
        raise ValueError("need at least 100 samples per grid point")
    t = tn_recurrence(model, max(2, int(n_grid[-1]))).t
    s_hat, s_err = [], []
    for g, n in enumerate(n_grid):
        x = sample_suffix_sizes(model, int(n), samples, seed, stream=g, workers=workers)
        s_hat.append(x.mean())
        s_err.append(x.std(ddof=1) / math.sqrt(samples))
    s_hat, s_err = np.array(s_hat), np.array(s_err)
    t_exact = t[n_grid]
    fit = fit_exponent(n_grid, s_hat - t_exact, s_err)
    return GapReport(n_grid, s_hat, s_err, t_exact, samples, fit)


def non_Bk_mass(model: MarkovModel, k: int, chunk: int = 1 << 16) -> float:
    """Total probability of the length-k words outside B_k (full enumeration)."""
    if k < 1:
        raise ValueError("k must be positive")
    m = model.m
    total = 0.0
    count = m**k
    for start in range(0, count, chunk):
        idx = np.arange(start, min(count, start + chunk))
        words = (idx[:, None] // m ** np.arange(k - 1, -1, -1)[None, :]) % m
        prob, _ = batch_word_data(model, words)
        total += float(prob[~batch_in_Bk(words)].sum())
    return total
