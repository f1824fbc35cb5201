"""Per-word generating functions for occurrences in a Markov text.

For a word ``w`` of length ``k`` with first symbol ``a`` and last symbol ``b``::

    S_w(z) = 1 + sum_{d in corr(w)} P(w_{k-d+1..k} | w_{k-d}) z^d
    F_w(z) = sum_{j>=0} [R^{j+1}]_{b,a} z^j / pi_a,        R = P - 1 (x) pi
    D_w(z) = S_w(z)(1 - z) + z^k P(w) (1 + (1 - z) F_w(z))

    sum_n P(O_n(w) = 0) z^n = (S_w(z) + z^k P(w) F_w(z)) / D_w(z)
    sum_n P(O_n(w) = 1) z^n = z^k P(w) / D_w(z)^2

where ``O_n(w)`` counts occurrences inside the first ``n`` symbols. The
``F_w`` term in the first numerator vanishes for memoryless sources.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly

from .markov import MarkovModel, spectral, word_probability
from .series import SeriesRational, batch_polymul, batch_series_div, series_div, trim

EXACT_MAX_M = 6
CONTAINED = "contained"
START = "start"


def _check_convention(convention: str) -> None:
    if convention not in (CONTAINED, START):
        raise ValueError(f"unknown occurrence convention {convention!r}")


# -- combinatorics of one word -----------------------------------------------

def correlation_set(w) -> frozenset[int]:
    """Displacements d in 1..k-1 with w[d:] == w[:k-d]."""
    w = tuple(w)
    k = len(w)
    return frozenset(d for d in range(1, k) if w[d:] == w[:k - d])


def is_in_Bk(w) -> bool:
    """True iff w has no self-overlap longer than half its length."""
    k = len(w)
    return not any(k - d > k / 2 for d in correlation_set(w))


def _conditional(model: MarkovModel, w, start: int) -> float:
    """P(w[start:] | w[start-1]) for 1 <= start <= k."""
    p = 1.0
    for i in range(start, len(w)):
        p *= model.transition[w[i - 1], w[i]]
    return p


def autocorrelation_poly(model: MarkovModel, w) -> SeriesRational:
    w = model.encode(w)
    k = len(w)
    if k == 0:
        raise ValueError("autocorrelation needs a non-empty word")
    coeffs = np.zeros(k)
    coeffs[0] = 1.0
    for d in correlation_set(w):
        coeffs[d] = _conditional(model, w, k - d)
    return SeriesRational.exact(coeffs)


# -- Markov correction F ------------------------------------------------------

@lru_cache(maxsize=64)
def _f_numerators(model: MarkovModel) -> tuple[np.ndarray, np.ndarray]:
    """det(I - zR) and the polynomial numerators of F for every (a, b).

    Returns ``(den, num)`` with ``num[a, b]`` ascending coefficients of
    den(z) * F_{a..b}(z), degree < m.
    """
    m = model.m
    r = spectral(model).rmat
    den = trim(np.poly(r).real, 1e-15)
    # F(z) * den(z) is a polynomial of degree < m; multiply series and cut.
    fser = np.empty((m, m, m))
    rp = r.copy()
    for j in range(m):
        fser[:, :, j] = rp.T / model.stationary[:, None]  # [a, b] -> R^{j+1}[b, a]/pi_a
        rp = rp @ r
    num = np.zeros((m, m, m))
    for j in range(m):
        for i in range(min(len(den), j + 1)):
            num[:, :, j] += den[i] * fser[:, :, j - i]
    num[np.abs(num) < 1e-15] = 0.0
    return den, num


def _f_coeffs(model: MarkovModel, a: int, b: int, order: int) -> np.ndarray:
    r = spectral(model).rmat
    out = np.empty(order + 1)
    rp = r.copy()
    for j in range(order + 1):
        out[j] = rp[b, a] / model.stationary[a]
        rp = rp @ r
    return out


def f_series(model: MarkovModel, a, b, order: int, exact: bool | None = None) -> SeriesRational:
    """F for words starting with ``a`` and ending with ``b``."""
    if order < 0:
        raise ValueError("order must be non-negative")
    a = model.encode([a])[0] if not isinstance(a, (int, np.integer)) else int(a)
    b = model.encode([b])[0] if not isinstance(b, (int, np.integer)) else int(b)
    if model.stationary[a] <= 0:
        raise ValueError("pi_a must be positive")
    if exact is None:
        exact = model.m <= EXACT_MAX_M
    if exact:
        den, num = _f_numerators(model)
        return SeriesRational.exact(num[a, b], den)
    return SeriesRational.truncated(_f_coeffs(model, a, b, order))


def f_value(model: MarkovModel, a: int, b: int, z: float, derivs: int = 0):
    """F(z) and optionally its first two derivatives via M(z) = R (I - zR)^-1."""
    sd = spectral(model)
    if sd.lambda1_modulus * abs(z) >= 1:
        raise ValueError(f"z={z} outside |lambda1 z| < 1")
    r = sd.rmat
    mz = np.linalg.solve((np.eye(model.m) - z * r).T, r.T).T  # R (I - zR)^-1
    pa = model.stationary[a]
    vals = [mz[b, a] / pa]
    if derivs >= 1:
        m2 = mz @ mz
        vals.append(m2[b, a] / pa)
    if derivs >= 2:
        vals.append(2 * (m2 @ mz)[b, a] / pa)
    return vals if derivs else vals[0]


def m_matrix(model: MarkovModel, z: float) -> np.ndarray:
    sd = spectral(model)
    if sd.lambda1_modulus * abs(z) >= 1:
        raise ValueError(f"z={z} outside |lambda1 z| < 1")
    r = sd.rmat
    return r @ np.linalg.inv(np.eye(model.m) - z * r)


# -- D_w and the occurrence generating functions ------------------------------

@dataclass(frozen=True, eq=False)
class WordGF:
    """Exact polynomial data for one word: D = dtilde/den, N0 = n0num/dtilde."""

    word: tuple[int, ...]
    prob: float
    s: np.ndarray
    den: np.ndarray
    fnum: np.ndarray
    dtilde: np.ndarray
    n0num: np.ndarray


def word_gf(model: MarkovModel, w) -> WordGF:
    w = model.encode(w)
    k = len(w)
    if k == 0:
        raise ValueError("word must be non-empty")
    s = autocorrelation_poly(model, w).numerator
    pw = word_probability(model, w)
    den, num = _f_numerators(model)
    fnum = num[w[0], w[-1]]
    zk = np.zeros(k + 1)
    zk[k] = pw
    one_minus = np.array([1.0, -1.0])
    g = _sum_trim(den, npoly.polymul(one_minus, fnum))
    dt = _sum_trim(npoly.polymul(npoly.polymul(s, one_minus), den), npoly.polymul(zk, g))
    n0 = _sum_trim(npoly.polymul(s, den), npoly.polymul(zk, fnum))
    return WordGF(w, pw, s, den, fnum, dt, n0)


def _sum_trim(a, b, rel: float = 1e-12) -> np.ndarray:
    """a + b with top coefficients dropped where the two parts cancel.

    The degree of D and N0 times det(I - zR) drops by exact identities, which
    floating point leaves as ~1e-18 residues; a spurious top coefficient
    would create a huge fake root.
    """
    n = max(len(a), len(b))
    pa = np.zeros(n)
    pb = np.zeros(n)
    pa[:len(a)] = a
    pb[:len(b)] = b
    out = pa + pb
    size = n
    while size > 1 and abs(out[size - 1]) <= rel * (abs(pa[size - 1]) + abs(pb[size - 1])):
        size -= 1
    return out[:size]


def d_poly(model: MarkovModel, w, order: int = 0, exact: bool | None = None) -> SeriesRational:
    """D_w(z); exact rational when the alphabet is small, else truncated to ``order``."""
    w = model.encode(w)
    if exact is None:
        exact = model.m <= EXACT_MAX_M
    if exact:
        g = word_gf(model, w)
        return SeriesRational.exact(g.dtilde, g.den)
    k = len(w)
    s = autocorrelation_poly(model, w).numerator
    pw = word_probability(model, w)
    size = max(order, k) + 2
    f = _f_coeffs(model, w[0], w[-1], size)
    out = np.zeros(size + 1)
    out[:len(s)] += s
    out[1:len(s) + 1] -= s
    g = np.zeros(size + 1)
    g[0] = 1.0
    g[:size] += f[:size]
    g[1:size + 1] -= f[:size]
    out[k:] += pw * g[:size + 1 - k]
    return SeriesRational.truncated(out[:order + 1])


def d_value(model: MarkovModel, w, z: float, derivs: int = 0):
    """D_w(z) and up to two derivatives by direct evaluation (any alphabet size)."""
    w = model.encode(w)
    k = len(w)
    s = autocorrelation_poly(model, w).numerator
    pw = word_probability(model, w)
    f, f1, f2 = f_value(model, w[0], w[-1], z, derivs=2)
    sv = npoly.polyval(z, s)
    s1 = npoly.polyval(z, npoly.polyder(s)) if len(s) > 1 else 0.0
    s2 = npoly.polyval(z, npoly.polyder(s, 2)) if len(s) > 2 else 0.0
    g = 1 + (1 - z) * f
    g1 = -f + (1 - z) * f1
    g2 = -2 * f1 + (1 - z) * f2
    zk = z**k
    zk1 = k * z ** (k - 1)
    zk2 = k * (k - 1) * z ** (k - 2) if k >= 2 else 0.0
    d0 = sv * (1 - z) + pw * zk * g
    if not derivs:
        return d0
    d1 = s1 * (1 - z) - sv + pw * (zk1 * g + zk * g1)
    d2 = s2 * (1 - z) - 2 * s1 + pw * (zk2 * g + 2 * zk1 * g1 + zk * g2)
    return [d0, d1, d2][:derivs + 1]


def n0_n1_coeffs(model: MarkovModel, w, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """P(O_n(w)=0) and P(O_n(w)=1) for n = 0..n_max (occurrences inside the first n symbols)."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    w = model.encode(w)
    if model.m <= EXACT_MAX_M:
        g = word_gf(model, w)
        n0 = series_div(g.n0num, g.dtilde, n_max)
        k = len(w)
        num1 = np.zeros(k + 1)
        num1[k] = g.prob
        num1 = npoly.polymul(num1, npoly.polymul(g.den, g.den))
        n1 = series_div(num1, npoly.polymul(g.dtilde, g.dtilde), n_max)
    else:
        k = len(w)
        dser = d_poly(model, w, n_max, exact=False).coefficients
        s = autocorrelation_poly(model, w).numerator
        pw = word_probability(model, w)
        num0 = np.zeros(n_max + 1)
        num0[:min(len(s), n_max + 1)] = s[:n_max + 1]
        if k <= n_max:
            num0[k:] += pw * _f_coeffs(model, w[0], w[-1], n_max - k)
        n0 = series_div(num0, dser, n_max)
        num1 = np.zeros(n_max + 1)
        if k <= n_max:
            num1[k] = pw
        n1 = series_div(num1, np.convolve(dser, dser)[:n_max + 1], n_max)
    return n0, n1


def occurrence_probs(model: MarkovModel, w, n: int, convention: str = CONTAINED):
    """(P(O_n=0), P(O_n=1)) at a single ``n`` under either convention.

    ``start`` counts occurrences starting in positions 1..n of an unbounded
    text, i.e. the contained count in the first n + k - 1 symbols.
    """
    _check_convention(convention)
    w = model.encode(w)
    big = n + len(w) - 1 if convention == START and n > 0 else n
    n0, n1 = n0_n1_coeffs(model, w, big)
    return float(n0[big]), float(n1[big])


def dn_qn(model: MarkovModel, w, n: int, convention: str = CONTAINED) -> tuple[float, float]:
    """d_n(w) = P(O_n=0) - (1-P(w))^n and q_n(w) = P(O_n=1) - nP(w)(1-P(w))^(n-1)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    p0, p1 = occurrence_probs(model, w, n, convention)
    pw = word_probability(model, w)
    q = 1.0 - pw
    return p0 - q**n, p1 - (n * pw * q ** (n - 1) if n else 0.0)


# -- dominant root -------------------------------------------------------------

@dataclass(frozen=True)
class RootData:
    """Dominant real root A of D_w and the pole coefficient of N0.

    ``residue`` is the constant c with [z^n] N0(z) = c A^-n + O(rho^-n)
    (contained convention); ``second_modulus`` is rho, the modulus of the
    next singularity, when the exact polynomial form is available.
    """

    A_w: float
    C_w: float
    residue: float
    multiplicity_flag: str
    second_modulus: float | None
    iterations: int
    k: int = 0

    @property
    def simple(self) -> bool:
        return self.multiplicity_flag == "simple"

    @property
    def start_residue(self) -> float:
        """Coefficient for start-position counts, [z^(n+k-1)] N0 = c' A^-n + ...

        Equals -A^-k S(A) / (C (1 + (1-A) F(A))), i.e. -A^-k S(A)/C when F = 0.
        """
        return self.residue * self.A_w ** (1 - self.k)


class RootError(RuntimeError):
    pass


def root_Aw(model: MarkovModel, w, max_iter: int = 200, tol: float = 1e-12) -> RootData:
    w = model.encode(w)
    k = len(w)
    if k == 0:
        raise ValueError("word must be non-empty")
    pw = word_probability(model, w)
    if pw <= 0:
        raise ValueError("word has zero probability")
    s1 = float(np.sum(autocorrelation_poly(model, w).numerator))
    lam = spectral(model).lambda1_modulus
    z_cap = 1.0 / lam if lam > 0 else math.inf

    z = 1.0 + pw / s1
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        d0, d1 = d_value(model, w, z, 1)
        if abs(d0) < tol:
            converged = True
            # polish to machine precision; the pole coefficient is sensitive to A - 1
            for _ in range(3):
                if d1 == 0:
                    break
                nz = z - d0 / d1
                if not (1.0 < nz < z_cap) or nz == z:
                    break
                z = nz
                d0, d1 = d_value(model, w, z, 1)
            break
        if d1 == 0:
            break
        step = d0 / d1
        nz = z - step
        if not (1.0 < nz < z_cap):
            break
        z = nz
    if not converged:
        z = _bisect_root(model, w, z_cap)
        if z is None:
            raise RootError(f"no convergence for word {w} after {max_iter} iterations")
    d0, d1, d2 = d_value(model, w, z, 2)
    mu = abs(d0 * d2) / (d1 * d1) if d1 else math.inf
    flag = "simple"
    if abs(d1) < 1e-8 or mu > 0.1:
        flag = "suspected-multiple"
        # Newton for a double root converges linearly; the modified step does not.
        for _ in range(50):
            d0, d1 = d_value(model, w, z, 1)
            if d1 == 0 or abs(d0) < 1e-300:
                break
            nz = z - 2 * d0 / d1
            if abs(nz - z) < 1e-15 * z:
                z = nz
                break
            z = nz
        d0, d1 = d_value(model, w, z, 1)

    second = None
    if model.m <= EXACT_MAX_M:
        roots = np.roots(word_gf(model, w).dtilde[::-1])
        far = roots[np.abs(roots - z) > 1e-6 * max(1.0, z)]
        second = float(np.min(np.abs(far))) if far.size else math.inf
    if flag == "simple":
        # equals A^(k-1) P(w) / ((1 - A) C) because D(A) = 0, without dividing by 1 - A
        f_a = f_value(model, w[0], w[-1], z)
        s_a = npoly.polyval(z, autocorrelation_poly(model, w).numerator)
        residue = -s_a / (z * d1 * (1 + (1 - z) * f_a))
    else:
        residue = math.nan
    return RootData(float(z), float(d1), float(residue), flag, second, it, k)


def _bisect_root(model, w, z_cap):
    lo = 1.0 + 1e-15
    if d_value(model, w, lo) <= 0:
        return None
    hi = lo
    step = 1e-3
    while True:
        hi = min(lo + step, z_cap * (1 - 1e-9))
        if d_value(model, w, hi) < 0:
            break
        if hi >= z_cap * (1 - 1e-9) or step > 1e6:
            return None
        lo = hi
        step *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if d_value(model, w, mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def dn_asymptotic(model: MarkovModel, w, n: int, root: RootData | None = None) -> float:
    """Pole approximation c A^-n - (1 - P(w))^n of d_n(w) (contained convention)."""
    root = root or root_Aw(model, w)
    if not root.simple:
        raise RootError("dominant root is not simple; pole formula does not apply")
    pw = word_probability(model, w)
    return root.residue * root.A_w ** (-n) - (1 - pw) ** n


@dataclass(frozen=True)
class PoleExpansion:
    """[z^n] N0 = poly[n] + sum_r coef_r r^-n (simple roots of the exact denominator)."""

    roots: np.ndarray
    coefs: np.ndarray
    poly: np.ndarray

    def coefficient(self, n: int) -> float:
        extra = self.poly[n] if n < len(self.poly) else 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            terms = self.coefs * self.roots ** (-float(n))
        return float(np.real(np.sum(terms))) + extra

    def tail(self, n: int, skip: float) -> float:
        """sum of |coef_r| |r|^-n over roots other than ``skip``."""
        far = np.abs(self.roots - skip) > 1e-9 * max(1.0, abs(skip))
        return float(np.sum(np.abs(self.coefs[far]) * np.abs(self.roots[far]) ** (-float(n))))


def pole_expansion(model: MarkovModel, w) -> PoleExpansion:
    """Partial fractions of N0 = num/den, assuming den has simple roots."""
    if model.m > EXACT_MAX_M:
        raise NotImplementedError("needs the exact rational form")
    g = word_gf(model, w)
    num, den = trim(g.n0num), trim(g.dtilde)
    q, r = npoly.polydiv(num, den) if len(num) >= len(den) else (np.zeros(0), num)
    roots = np.roots(den[::-1])
    if roots.size > 1:
        gap = np.abs(roots[:, None] - roots[None, :])
        gap[np.diag_indices(roots.size)] = np.inf
        if gap.min() < 1e-6 * max(1.0, float(np.abs(roots).max())):
            raise RootError("denominator has a repeated root; no simple partial fractions")
    dder = npoly.polyder(den)
    coefs = -npoly.polyval(roots, r) / (roots * npoly.polyval(roots, dder))
    return PoleExpansion(roots, coefs, np.asarray(q, dtype=float))


def trace_decay(model: MarkovModel, z: float, k: int) -> float:
    """trace(M(z) P^k), equal to sum over |w| = k+1 of P(w) F_w(z)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    sd = spectral(model)
    mz = m_matrix(model, z)
    return float(np.trace(mz @ (sd.dmat + sd.rpow(k)))) if k else float(np.trace(mz))


# -- batched evaluation for many words of one length ---------------------------

def batch_word_data(model: MarkovModel, words: np.ndarray):
    """Probabilities and autocorrelation coefficients for a (W, k) int array."""
    words = np.asarray(words)
    wcount, k = words.shape
    logp = np.log(model.stationary)[words[:, 0]] if k else np.zeros(wcount)
    with np.errstate(divide="ignore"):
        logt = np.log(model.transition)
    steps = logt[words[:, :-1], words[:, 1:]] if k > 1 else np.zeros((wcount, 0))
    prob = np.exp(logp + steps.sum(axis=1))
    # suffix sums: tail[:, i] = sum of log-steps with index >= i (step i joins i, i+1)
    tail = np.zeros((wcount, k))
    if k > 1:
        tail[:, :-1] = np.cumsum(steps[:, ::-1], axis=1)[:, ::-1]
    s = np.zeros((wcount, k))
    s[:, 0] = 1.0
    for d in range(1, k):
        match = np.all(words[:, d:] == words[:, :k - d], axis=1)
        # overhang w[k-d:] given w[k-d-1]: steps k-d-1 .. k-2
        s[:, d] = np.where(match, np.exp(tail[:, k - d - 1]), 0.0)
    return prob, s


def batch_occurrence_probs(model: MarkovModel, words: np.ndarray, n: int,
                           convention: str = START):
    """P(O_n=0), P(O_n=1) and P(w) for every row of ``words`` at one ``n``."""
    _check_convention(convention)
    if model.m > EXACT_MAX_M:
        raise NotImplementedError("batched evaluation needs the exact rational form")
    words = np.asarray(words)
    wcount, k = words.shape
    prob, s = batch_word_data(model, words)
    den, num = _f_numerators(model)
    fn = num[words[:, 0], words[:, -1]]              # (W, m)
    dn = np.broadcast_to(den, (wcount, len(den)))
    one_minus = np.broadcast_to(np.array([1.0, -1.0]), (wcount, 2))
    zk = np.zeros((wcount, k + 1))
    zk[:, k] = prob
    big = n + k - 1 if convention == START and n > 0 else n
    if big < 0:
        return np.ones(wcount), np.zeros(wcount), prob
    g = batch_polymul(one_minus, fn)
    g[:, :dn.shape[1]] += dn
    g[np.abs(g) < 1e-13] = 0.0
    first = batch_polymul(batch_polymul(s, one_minus), dn)
    second = batch_polymul(zk, g)
    width = max(first.shape[1], second.shape[1])
    dt = np.zeros((wcount, width))
    dt[:, :first.shape[1]] += first
    dt[:, :second.shape[1]] += second
    a0 = batch_polymul(s, dn)
    a1 = batch_polymul(zk, fn)
    n0num = np.zeros((wcount, max(a0.shape[1], a1.shape[1])))
    n0num[:, :a0.shape[1]] += a0
    n0num[:, :a1.shape[1]] += a1
    n0 = batch_series_div(n0num, dt, big)[:, big]
    y = batch_series_div(batch_polymul(zk, dn), dt, big)
    n1 = batch_series_div(batch_polymul(y, dn), dt, big)[:, big]
    return n0, n1, prob
