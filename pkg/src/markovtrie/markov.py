"""Markov sources: validation, stationary law, sampling, entropy and spectra."""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ROW_TOL = 1e-12


class ModelError(ValueError):
    """Raised when a transition matrix does not describe an ergodic source."""


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise ModelError("alphabet needs at least two symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise ModelError(f"alphabet symbols are not distinct: {self.symbols}")

    def __len__(self):
        return len(self.symbols)

    def index(self, label: str) -> int:
        try:
            return self.symbols.index(label)
        except ValueError:
            raise ModelError(f"unknown symbol {label!r}") from None


@dataclass(frozen=True, eq=False)
class MarkovModel:
    """First-order stationary Markov source.

    ``transition[b, a]`` is P(a|b), the probability that symbol ``a``
    follows symbol ``b``. Build instances with :func:`new_model`.
    """

    alphabet: Alphabet
    transition: np.ndarray
    stationary: np.ndarray
    name: str = field(default="")

    @property
    def m(self) -> int:
        return len(self.alphabet)

    def encode(self, word) -> tuple[int, ...]:
        """Map a label string (or a sequence of indices) to symbol indices."""
        if isinstance(word, str):
            if all(len(s) == 1 for s in self.alphabet.symbols):
                return tuple(self.alphabet.index(ch) for ch in word)
            raise ModelError("multi-character labels: pass a sequence of labels")
        out = []
        for s in word:
            if isinstance(s, (int, np.integer)):
                if not 0 <= s < self.m:
                    raise ModelError(f"unknown symbol index {s}")
                out.append(int(s))
            else:
                out.append(self.alphabet.index(s))
        return tuple(out)

    def decode(self, word: Iterable[int]) -> str:
        return "".join(self.alphabet.symbols[i] for i in word)

    @property
    def is_memoryless(self) -> bool:
        return bool(np.allclose(self.transition, self.transition[0], atol=1e-15))


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(len(adj), dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        for v in np.flatnonzero(adj[u]):
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return seen


def chain_period(adj: np.ndarray) -> int:
    """Period of an irreducible chain: gcd of level differences along edges."""
    m = len(adj)
    level = np.full(m, -1)
    level[0] = 0
    queue = [0]
    for u in queue:
        for v in np.flatnonzero(adj[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u in range(m):
        for v in np.flatnonzero(adj[u]):
            g = math.gcd(g, int(abs(level[u] + 1 - level[v])))
    return g


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    m = len(transition)
    if m <= 64:
        a = transition.T - np.eye(m)
        a[-1, :] = 1.0
        rhs = np.zeros(m)
        rhs[-1] = 1.0
        pi = np.linalg.solve(a, rhs)
    else:
        pi = np.full(m, 1.0 / m)
        for _ in range(100_000):
            nxt = pi @ transition
            if np.max(np.abs(nxt - pi)) < 1e-15:
                break
            pi = nxt
        pi = nxt
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def new_model(transition, alphabet=None, name: str = "") -> MarkovModel:
    """Validate a transition matrix and return an ergodic :class:`MarkovModel`.

    Raises :class:`ModelError` for non-square or non-stochastic input,
    negative entries, and chains that are reducible or periodic.
    """
    p = np.array(transition, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ModelError(f"transition matrix must be square, got shape {p.shape}")
    m = p.shape[0]
    if alphabet is None:
        alphabet = Alphabet(tuple(str(i) for i in range(m)))
    elif not isinstance(alphabet, Alphabet):
        alphabet = Alphabet(tuple(alphabet))
    if len(alphabet) != m:
        raise ModelError(f"alphabet has {len(alphabet)} symbols, matrix is {m}x{m}")
    if np.any(p < 0):
        raise ModelError("transition matrix has a negative entry")
    if np.any(p > 1):
        raise ModelError("transition entries must not exceed 1")
    rows = p.sum(axis=1)
    bad = np.flatnonzero(np.abs(rows - 1.0) > ROW_TOL)
    if bad.size:
        raise ModelError(f"row {int(bad[0])} is not stochastic (sums to {rows[bad[0]]!r})")
    adj = p > 0
    for s in range(m):
        if not _reachable(adj, s).all():
            raise ModelError(f"chain is reducible: state {alphabet.symbols[s]!r} "
                             "does not reach every other state")
    period = chain_period(adj)
    if period != 1:
        raise ModelError(f"chain is periodic with period {period}")
    pi = stationary_distribution(p)
    if np.max(np.abs(pi @ p - pi)) > ROW_TOL:
        raise ModelError("stationary solve did not converge")
    p.setflags(write=False)
    pi.setflags(write=False)
    return MarkovModel(alphabet, p, pi, name)


def memoryless(probs, alphabet=None, name: str = "") -> MarkovModel:
    probs = np.asarray(probs, dtype=float)
    return new_model(np.tile(probs, (len(probs), 1)), alphabet, name)


def load_model(path) -> MarkovModel:
    """Read a model file with keys ``alphabet`` and ``transition`` (JSON)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "transition" not in data:
        raise ModelError(f"model file {path} lacks a 'transition' key")
    return new_model(data["transition"], data.get("alphabet"), data.get("name", path.stem))


def dump_model(model: MarkovModel) -> str:
    return json.dumps({"alphabet": list(model.alphabet.symbols),
                       "transition": model.transition.tolist()})


def word_probability(model: MarkovModel, w) -> float:
    w = model.encode(w)
    if not w:
        return 1.0
    prob = model.stationary[w[0]]
    for b, a in zip(w, w[1:]):
        prob *= model.transition[b, a]
    return float(prob)


# -- sampling ---------------------------------------------------------------

class MarkovStream:
    """Lazily extended sample path; symbol ``t`` consumes the ``t``-th uniform draw.

    Equal seeds give equal prefixes no matter how the stream is extended,
    and :func:`generate` returns the same prefix in one call.
    """

    def __init__(self, model: MarkovModel, seed: int, chunk: int = 256):
        self.model = model
        self.rng = np.random.default_rng(seed)
        self.chunk = chunk
        self.symbols: list[int] = []
        self._start_cdf = np.cumsum(model.stationary)[:-1].tolist()
        self._cdf = [np.cumsum(row)[:-1].tolist() for row in model.transition]

    def __len__(self):
        return len(self.symbols)

    def extend(self, count: int) -> None:
        out = self.symbols
        while count > 0:
            take = min(count, self.chunk)
            for u in self.rng.random(take).tolist():
                cdf = self._cdf[out[-1]] if out else self._start_cdf
                out.append(bisect.bisect_right(cdf, u))
            count -= take

    def ensure(self, length: int) -> None:
        if length > len(self.symbols):
            self.extend(length - len(self.symbols))

    def __getitem__(self, i):
        if isinstance(i, slice):
            stop = i.stop if i.stop is not None else len(self.symbols)
            self.ensure(stop)
        else:
            self.ensure(i + 1)
        return self.symbols[i]


def generate(model: MarkovModel, seed: int, length: int) -> np.ndarray:
    """Stationary sample path of ``length`` symbols (as indices)."""
    s = MarkovStream(model, seed, chunk=max(length, 1))
    s.extend(length)
    return np.array(s.symbols, dtype=np.int64)


def generate_many(model: MarkovModel, rng: np.random.Generator, count: int,
                  length: int, prev: np.ndarray | None = None) -> np.ndarray:
    """``count`` independent paths advanced column by column (vectorised).

    When ``prev`` (last symbols of existing paths) is given the new columns
    continue those paths instead of starting from the stationary law.
    """
    out = np.empty((count, length), dtype=np.int8)
    cdf = np.cumsum(model.transition, axis=1)[:, :-1]
    start = np.cumsum(model.stationary)[:-1]
    for t in range(length):
        u = rng.random(count)
        if prev is None:
            cur = np.searchsorted(start, u, side="right")
        else:
            cur = (u[:, None] >= cdf[prev]).sum(axis=1)
        out[:, t] = cur
        prev = cur
    return out


# -- entropy and spectra ----------------------------------------------------

def _xlogx(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)


def entropy_rate(model: MarkovModel) -> float:
    """h = -sum_a pi_a sum_b P(b|a) ln P(b|a), in nats."""
    return float(-(model.stationary @ _xlogx(model.transition).sum(axis=1)))


@dataclass(frozen=True, eq=False)
class SpectralData:
    dmat: np.ndarray
    rmat: np.ndarray
    lambda1_modulus: float

    def rpow(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.rmat, k)


@lru_cache(maxsize=64)
def spectral(model: MarkovModel) -> SpectralData:
    """Split P = D + R with D = 1 (x) pi (rows equal pi) and RD = DR = 0."""
    d = np.tile(model.stationary, (model.m, 1))
    r = model.transition - d
    lam = float(np.max(np.abs(np.linalg.eigvals(r))))
    if lam < 1e-14:
        lam = 0.0
    return SpectralData(d, r, lam)


def max_path_probability(model: MarkovModel, length: int) -> float:
    """max over b and paths v of length ``length`` of P(v | previous symbol b)."""
    best = np.ones(model.m)
    for _ in range(length):
        best = np.max(model.transition * best[None, :], axis=1)
    return float(best.max())


# -- periodicity ------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicityReport:
    alphas: dict
    classification: str
    common_measure: float | None
    remark_consistent: bool = True
    max_denominator: int = 10**6
    tol: float = 1e-9

    @property
    def periodic(self) -> bool:
        return self.classification == "Periodic"


def alpha_table(model: MarkovModel) -> dict:
    p = model.transition
    out = {}
    m = model.m
    for a in range(m):
        for b in range(m):
            for c in range(m):
                if p[b, a] > 0 and p[a, c] > 0 and p[b, c] > 0:
                    out[(a, b, c)] = math.log(p[b, a] * p[a, c] / p[b, c])
    return out


def rational_ratio(x: float, max_den: int, tol: float) -> Fraction | None:
    """Best p/q with q <= max_den if it matches x within tol/max_den, else None.

    Every real has an approximation within 1/(q*max_den), so an absolute
    tolerance that does not shrink with max_den would accept anything.
    """
    frac = Fraction(x).limit_denominator(max_den)
    if abs(x - frac) <= tol / max_den:
        return frac
    return None


def _commensurable(values: Sequence[float], max_den: int, tol: float):
    nonzero = [v for v in values if abs(v) > tol]
    if not nonzero:
        return True, 0.0
    ref = max(nonzero, key=abs)
    dens = []
    for v in nonzero:
        frac = rational_ratio(v / ref, max_den, tol)
        if frac is None:
            return False, None
        dens.append(frac.denominator)
    lcm = reduce(lambda x, y: x * y // math.gcd(x, y), dens, 1)
    return True, abs(ref) / lcm


def classify_periodicity(model: MarkovModel, tol: float = 1e-9,
                         max_denominator: int = 10**6) -> PeriodicityReport:
    """Periodic iff all defined alpha_abc are commensurable.

    An all-zero table is reported Periodic with ``common_measure = 0``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    alphas = alpha_table(model)
    ok, measure = _commensurable(list(alphas.values()), max_denominator, tol)
    if ok and measure:
        for v in alphas.values():
            if abs(v - round(v / measure) * measure) > max(tol, 1e-12 * abs(v)):
                ok, measure = False, None
                break
    # Per-c classification must agree with the global one.
    per_c = []
    for c in range(model.m):
        vals = [v for (a, b, cc), v in alphas.items() if cc == c]
        per_c.append(_commensurable(vals, max_denominator, tol)[0])
    consistent = all(x == per_c[0] for x in per_c) and (per_c[0] == ok or not alphas)
    return PeriodicityReport(alphas, "Periodic" if ok else "Aperiodic",
                             measure if ok else None, consistent,
                             max_denominator, tol)
