"""Reproducible per-sample seeds from one master seed (SplitMix64).

``derive_seed(master, i)`` is the ``i``-th output (0-based) of the SplitMix64
generator started at state ``master``; extra path components are folded in
by feeding each one through the same mixer. Only integer arithmetic modulo
2**64 is used, so seeds agree across machines and worker counts.
"""

from __future__ import annotations

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def splitmix64(state: int, index: int) -> int:
    """Output number ``index`` of SplitMix64 seeded with ``state``."""
    if index < 0:
        raise ValueError("index must be non-negative")
    return mix64(state + (index + 1) * GOLDEN)


def derive_seed(master: int, *path: int) -> int:
    """Seed for the sample addressed by ``path`` under ``master``.

    >>> derive_seed(0, 0) == splitmix64(0, 0)
    True
    """
    state = master & MASK
    for i, p in enumerate(path):
        if i:
            state = mix64(state)
        state = splitmix64(state, p)
    return state
