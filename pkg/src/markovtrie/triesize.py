"""Average trie size: conditioned recurrence, word sums, n/h and Mellin-side roots.

Throughout the root counts as an internal node once two keys are present,
so for the fair coin t_2 = 2 and t_3 = 10/3.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import optimize, stats
from scipy.special import comb

from .markov import MarkovModel, classify_periodicity, entropy_rate

EPS = np.finfo(float).eps


class SingularSystem(ArithmeticError):
    def __init__(self, n: int, cond: float):
        super().__init__(f"conditioned system at n={n} is singular (cond={cond:.3g})")
        self.n = n


@dataclass(frozen=True, eq=False)
class TrieSizeTable:
    t: np.ndarray        # t_0..t_N
    t_cond: np.ndarray   # (m, N+1): keys all starting with symbol a
    method: str

    @property
    def N(self) -> int:
        return len(self.t) - 1


def tn_recurrence(model: MarkovModel, N: int) -> TrieSizeTable:
    """t_0..t_N from the recurrence on tries whose keys share the first symbol.

    With u[a, n] the size of the subtree at node ``a`` holding n keys,
    u[a, n] = 1 + sum_b sum_j Bin(j; n, P(b|a)) u[b, j] for n >= 2. The j = n
    terms are moved to the left and the m x m system is solved per n.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    m = model.m
    p = model.transition
    u = np.zeros((m, N + 1))
    eye = np.eye(m)
    for n in range(2, N + 1):
        j = np.arange(2, n)
        rhs = np.ones(m)
        if j.size:
            w = stats.binom.pmf(j[None, None, :], n, p[:, :, None])  # (a, b, j)
            rhs += np.einsum("abj,bj->a", w, u[:, 2:n])
        lhs = eye - p**n
        cond = np.linalg.cond(lhs)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularSystem(n, cond)
        u[:, n] = np.linalg.solve(lhs, rhs)
    t = np.zeros(N + 1)
    for n in range(2, N + 1):
        k = np.arange(2, n + 1)
        w = stats.binom.pmf(k[None, :], n, model.stationary[:, None])  # (a, k)
        t[n] = 1.0 + float(np.sum(w * u[:, 2:n + 1]))
    return TrieSizeTable(t, u, "recurrence")


def shared_prob(n: int, x):
    """1 - (1-x)^n - n x (1-x)^(n-1): probability that two of n keys start with w."""
    x = np.asarray(x, dtype=float)
    if n < 2:
        return np.zeros_like(x)
    with np.errstate(divide="ignore"):
        l1 = np.log1p(-np.minimum(x, 1.0))
        out = -np.expm1(n * l1) - n * x * np.exp((n - 1) * l1)
    out = np.where(x >= 1.0, 1.0, out)
    return np.clip(out, 0.0, 1.0)


@lru_cache(maxsize=32)
def _resolvent_rows(model: MarkovModel, jmax: int) -> np.ndarray:
    """h[j, b] = sum over non-empty v of P(v | b)^j, for j = 2..jmax."""
    m = model.m
    out = np.zeros((jmax + 1, m))
    for j in range(2, jmax + 1):
        q = model.transition**j
        out[j] = np.linalg.solve(np.eye(m) - q, q.sum(axis=1))
    return out


@dataclass(frozen=True)
class WordSum:
    value: float
    bound: float
    nodes: int


def _binom_series_terms(n: int, jmax: int) -> np.ndarray:
    """(-1)^j (j-1) C(n, j) for j = 0..jmax (zero for j < 2 or j > n)."""
    j = np.arange(jmax + 1)
    c = comb(n, j, exact=False)
    return np.where((j >= 2) & (j <= n), (-1.0) ** j * (j - 1) * c, 0.0)


def tn_wordsum(model: MarkovModel, n: int, tol: float = 1e-9, split: float = 0.5,
               node_cap: int = 5_000_000) -> WordSum:
    """t_n as a sum over words of P(at least two keys start with w).

    Words with n P(w) > ``split`` are visited one by one. Below a word with
    n P(w) <= ``split`` the whole subtree is summed in closed form,
    sum_j (-1)^j (j-1) C(n,j) P(w)^j h_j[last symbol], truncated once the
    remaining terms are under ``tol * P(w)``; those frontier words form an
    antichain, so the truncation error is below ``tol``. The reported bound
    adds a floating-point rounding estimate.
    """
    if n < 0 or tol <= 0:
        raise ValueError("need n >= 0 and tol > 0")
    if n < 2:
        return WordSum(0.0, 0.0, 1)
    m = model.m
    h2 = float(_resolvent_rows(model, 2)[2].max())
    # relative size of the first omitted term at the largest frontier P(w)
    jmax = 2
    while jmax < n and jmax * comb(n, jmax + 1) * (split / n) ** jmax * h2 > 0.5 * tol:
        jmax += 1
    h = _resolvent_rows(model, jmax)
    coef = _binom_series_terms(n, jmax)
    value = 1.0  # the empty word
    trunc = 0.0
    magnitude = 1.0
    nodes = 1
    probs = model.stationary.copy()
    last = np.arange(m)
    while probs.size:
        nodes += probs.size
        if nodes > node_cap:
            raise RuntimeError(f"word sum needs more than {node_cap} nodes")
        f = shared_prob(n, probs)
        value += float(f.sum())
        magnitude += float(f.sum())
        small = n * probs <= split
        if small.any():
            x, b = probs[small], last[small]
            powers = x[:, None] ** np.arange(jmax + 1)[None, :]
            terms = coef[None, :] * powers * h[:, b].T
            sub = terms.sum(axis=1)
            value += float(sub.sum())
            magnitude += float(np.abs(terms).sum())
            # first omitted term bounds the tail (ratios below split/(j+1) < 1/2)
            if jmax < n:
                nxt = jmax * comb(n, jmax + 1) * x ** (jmax + 1) * h[2, b]
                trunc += float(2 * nxt.sum())
        big = ~small
        if not big.any():
            break
        pb, lb = probs[big], last[big]
        probs = (pb[:, None] * model.transition[lb]).ravel()
        last = np.tile(np.arange(m), pb.size)
        keep = probs > 0
        probs, last = probs[keep], last[keep]
    bound = float(trunc + 64 * EPS * magnitude)
    return WordSum(value, bound, nodes)


def asymptotic_leading(model: MarkovModel, n: int) -> float:
    if n < 1:
        raise ValueError("n must be at least 1")
    return n / entropy_rate(model)


# -- Mellin-side eigenvalue scan ---------------------------------------------

def p_of_s(model: MarkovModel, s: complex) -> np.ndarray:
    """Matrix of P(a|b)^(-s), zero where the transition probability is zero."""
    p = model.transition
    with np.errstate(divide="ignore"):
        lp = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), 0.0)
    return np.where(p > 0, np.exp(-s * lp), 0.0)


def dominant_eigenvalue(model: MarkovModel, s: complex) -> complex:
    ev = np.linalg.eigvals(p_of_s(model, s))
    return complex(ev[np.argmax(np.abs(ev))])


@dataclass(frozen=True, eq=False)
class MellinDiagnostics:
    lambda_at: Callable[[float], complex]
    extra_roots: list
    predicted_spacing: float | None
    scan_range: tuple
    grid: float
    table: np.ndarray = field(repr=False, default=None)  # columns t, |det(I - P(-1+it))|

    def aligned(self) -> bool:
        """Roots sit on multiples of the predicted spacing and none is missing."""
        if self.predicted_spacing is None:
            return not self.extra_roots
        lo, hi = self.scan_range
        sp = self.predicted_spacing
        expect = [j * sp for j in range(int(np.ceil(lo / sp)), int(np.floor(hi / sp)) + 1)
                  if j != 0]
        if len(expect) != len(self.extra_roots):
            return False
        return all(abs(a - b) <= self.grid for a, b in zip(expect, self.extra_roots))


def _det(model: MarkovModel, ts: np.ndarray) -> np.ndarray:
    """det(I - P(-1+it)) for an array of (possibly complex) t."""
    p = model.transition
    with np.errstate(divide="ignore"):
        lp = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), 0.0)
    s = -1.0 + 1j * np.asarray(ts)
    mats = np.where(p > 0, np.exp(-s[:, None, None] * lp[None]), 0.0)
    return np.linalg.det(np.eye(model.m)[None] - mats)


def _det_abs(model: MarkovModel, ts: np.ndarray) -> np.ndarray:
    return np.abs(_det(model, ts))


def mellin_diagnostics(model: MarkovModel, scan_range=(-40.0, 40.0), grid: float = 1e-3,
                       root_tol: float = 1e-8) -> MellinDiagnostics:
    """Locate t != 0 with lambda(-1+it) = 1, i.e. det(I - P(-1+it)) = 0.

    On this line the entries have modulus P(a|b), so an eigenvalue equal to 1
    is automatically dominant. Each local minimum of |det| on the grid seeds
    a complex secant iteration on the analytic function t -> det; it is kept
    when the iteration converges to a point with |Im t| and |det| below
    ``root_tol``.
    """
    lo, hi = map(float, scan_range)
    if not lo < hi or grid <= 0:
        raise ValueError("bad scan window")
    ts = np.arange(lo, hi + grid / 2, grid)
    vals = _det_abs(model, ts)
    roots = []
    idx = np.nonzero((vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:]))[0] + 1
    for i in idx:
        try:
            with np.errstate(all="ignore"), warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                z = complex(optimize.newton(lambda t: complex(_det(model, np.array([t]))[0]),
                                            complex(ts[i]), x1=complex(ts[i] + grid / 4),
                                            tol=1e-14, maxiter=100))
        except (RuntimeError, OverflowError):
            continue
        if not np.isfinite(z) or abs(z.imag) > root_tol or abs(z.real - ts[i]) > grid or abs(z.real) <= grid:
            continue
        if abs(_det(model, np.array([z.real]))[0]) > root_tol:
            continue
        if not roots or abs(z.real - roots[-1]) > grid:
            roots.append(float(z.real))
    rep = classify_periodicity(model)
    spacing = 2 * np.pi / rep.common_measure if rep.periodic and rep.common_measure else None
    return MellinDiagnostics(lambda t: dominant_eigenvalue(model, -1.0 + 1j * t), roots,
                             spacing, (lo, hi), grid, np.column_stack([ts, vals]))
