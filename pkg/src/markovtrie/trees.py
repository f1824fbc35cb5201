"""Non-compacted tries over independent strings and suffix trees over one string.

A node is internal when at least two keys pass through it; the root (empty
prefix) is internal as soon as there are two keys. Keys are semi-infinite
and read lazily until every pair has been told apart.

Two counting routes are provided: a vectorised one (sort the key windows,
take longest common prefixes of neighbours) used for Monte Carlo, and a
plain child-map trie with lazy leaf push-down used for cross-checks.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .markov import MarkovModel, MarkovStream, generate_many

EXTENSION_CAP = 10**6


class ExtensionCapExceeded(RuntimeError):
    """Keys stayed equal for longer than the cap; the source looks degenerate."""


@dataclass(frozen=True)
class TrieStats:
    internal_nodes: int
    depth_sum: int
    n: int


@dataclass(frozen=True)
class SuffixTreeStats:
    internal_nodes: int
    generated_length: int
    n: int


# -- counting from sorted windows -------------------------------------------

def neighbour_lcp(rows: np.ndarray) -> np.ndarray:
    """LCP of consecutive rows of a lexicographically sorted 2-D array."""
    eq = rows[1:] == rows[:-1]
    width = rows.shape[1]
    first_diff = np.where(eq.all(axis=1), width, np.argmin(eq, axis=1))
    return first_diff.astype(np.int64)


def sort_rows(rows: np.ndarray) -> np.ndarray:
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def count_from_lcp(lcp: np.ndarray) -> tuple[int, int]:
    """(internal nodes, leaf depth sum) of the trie on the sorted keys.

    Prefixes of length l >= 1 shared by two or more keys are the maximal runs
    of neighbours with LCP >= l, which gives 1 + sum(lcp) - sum(min(adjacent)).
    """
    if lcp.size == 0:
        return 0, 0
    internal = 1 + int(lcp.sum()) - int(np.minimum(lcp[1:], lcp[:-1]).sum())
    pad = np.concatenate([[0], lcp, [0]])
    depth = int((np.maximum(pad[:-1], pad[1:]) + 1).sum())
    return internal, depth


def _initial_width(model: MarkovModel, n: int) -> int:
    pmax = float(model.transition.max())
    return int(2 * np.log(max(n, 2)) / -np.log(pmax)) + 8


def trie_size_sample(model: MarkovModel, n: int, seed: int,
                     cap: int = EXTENSION_CAP) -> TrieStats:
    """Internal nodes of the trie on ``n`` independent stationary paths."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n < 2:
        return TrieStats(0, 0, n)
    rng = np.random.default_rng(seed)
    width = min(_initial_width(model, n), cap)
    keys = generate_many(model, rng, n, width)
    while True:
        lcp = neighbour_lcp(sort_rows(keys))
        if lcp.max() < keys.shape[1]:
            break
        if keys.shape[1] >= cap:
            raise ExtensionCapExceeded(f"keys still equal after {cap} symbols")
        more = min(keys.shape[1], cap - keys.shape[1])
        keys = np.concatenate([keys, generate_many(model, rng, n, more, prev=keys[:, -1])],
                              axis=1)
    internal, depth = count_from_lcp(lcp)
    return TrieStats(internal, depth, n)


def suffix_windows(text: np.ndarray, n: int, width: int) -> np.ndarray:
    return np.lib.stride_tricks.sliding_window_view(text[:n + width - 1], width)


def suffix_tree_size_sample(model: MarkovModel, n: int, seed: int,
                            cap: int = EXTENSION_CAP,
                            stream: MarkovStream | None = None) -> SuffixTreeStats:
    """Internal nodes of the non-compacted tree on the first ``n`` suffixes.

    The first ``n`` symbols of the text depend on ``seed`` only, so smaller
    ``n`` see a prefix of the same text.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n < 2:
        return SuffixTreeStats(0, n, n)
    if stream is None:
        stream = MarkovStream(model, seed, chunk=4096)
    width = min(_initial_width(model, n), cap)
    while True:
        stream.ensure(n + width - 1)
        text = np.asarray(stream.symbols[:n + width - 1], dtype=np.int8)
        lcp = neighbour_lcp(sort_rows(suffix_windows(text, n, width)))
        if lcp.max() < width:
            break
        if width >= cap:
            raise ExtensionCapExceeded(f"suffixes still equal after {cap} symbols")
        width = min(2 * width, cap)
    internal, _ = count_from_lcp(lcp)
    used = n + int(lcp.max())
    return SuffixTreeStats(internal, used, n)


# -- child-map trie ---------------------------------------------------------

class ChildMapTrie:
    """Trie of lazily read keys; a leaf is pushed down when a second key arrives.

    ``key(i, depth)`` returns symbol ``depth`` of key ``i``.
    """

    def __init__(self, key: Callable[[int, int], int], cap: int = EXTENSION_CAP):
        self.key = key
        self.cap = cap
        self.root: dict | int | None = None
        self.internal = 0
        self.n = 0

    def insert(self, i: int) -> None:
        self.n += 1
        if self.root is None:
            self.root = i
            return
        if not isinstance(self.root, dict):
            self.root = self._split(self.root, i, 0)
            return
        node, depth = self.root, 0
        while True:
            c = self.key(i, depth)
            child = node.get(c)
            if child is None:
                node[c] = i
                return
            if isinstance(child, dict):
                node, depth = child, depth + 1
                continue
            node[c] = self._split(child, i, depth + 1)
            return

    def _split(self, j: int, i: int, depth: int) -> dict:
        """Internal chain at ``depth`` holding leaves ``j`` and ``i``."""
        top = node = {}
        self.internal += 1
        while True:
            if depth >= self.cap:
                raise ExtensionCapExceeded(f"keys {j} and {i} agree on {self.cap} symbols")
            a, b = self.key(j, depth), self.key(i, depth)
            if a != b:
                node[a], node[b] = j, i
                return top
            nxt = {}
            node[a] = nxt
            node = nxt
            self.internal += 1
            depth += 1

    def walk(self):
        """Yield (prefix, node) for every internal node, root first."""
        if not isinstance(self.root, dict):
            return
        todo = [((), self.root)]
        while todo:
            prefix, node = todo.pop()
            yield prefix, node
            for c in sorted(node, reverse=True):
                if isinstance(node[c], dict):
                    todo.append((prefix + (c,), node[c]))


def child_map_trie(keys: Sequence[Sequence[int]] | None = None,
                   key: Callable[[int, int], int] | None = None, count: int | None = None,
                   cap: int = EXTENSION_CAP) -> ChildMapTrie:
    """Build a :class:`ChildMapTrie` from explicit keys or a key function."""
    if key is None:
        def key(i, d, _keys=keys):
            seq = _keys[i]
            if d >= len(seq):
                raise ExtensionCapExceeded(f"key {i} ran out of symbols at depth {d}")
            return seq[d]
        count = len(keys)
    trie = ChildMapTrie(key, cap)
    for i in range(count):
        trie.insert(i)
    return trie


def suffix_child_map(stream: MarkovStream, n: int, cap: int = EXTENSION_CAP) -> ChildMapTrie:
    return child_map_trie(key=lambda i, d: stream[i + d], count=n, cap=cap)


def repeated_prefix_count(stream: MarkovStream, n: int) -> int:
    """Distinct words with at least two start positions among the first ``n``.

    Plain scanning: for each length collect the words starting at 0..n-1 and
    count those seen twice; stop at the first length with no repeat.
    """
    if n < 2:
        return 0
    total = 1  # the empty word starts everywhere
    length = 1
    while True:
        stream.ensure(n + length - 1)
        text = stream.symbols
        seen = Counter(tuple(text[i:i + length]) for i in range(n))
        rep = sum(1 for c in seen.values() if c >= 2)
        if rep == 0:
            return total
        total += rep
        length += 1


def instance_identity_check(model: MarkovModel, n: int, seed: int) -> bool:
    """Check tree size = number of words starting twice in 1..n, on one text."""
    if n > 64:
        raise ValueError("identity check is meant for n <= 64")
    stats = suffix_tree_size_sample(model, n, seed)
    stream = MarkovStream(model, seed, chunk=4096)
    scan = repeated_prefix_count(stream, n)
    tree = suffix_child_map(stream, n).internal if n >= 2 else 0
    return stats.internal_nodes == scan == tree
