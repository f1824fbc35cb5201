"""Named reference sources used by the tests and the CLI."""

from __future__ import annotations

from pathlib import Path

from .markov import MarkovModel, ModelError, load_model, memoryless, new_model


def uniform2() -> MarkovModel:
    return memoryless([0.5, 0.5], name="uniform2")


def memoryless64() -> MarkovModel:
    return memoryless([0.6, 0.4], name="memoryless64")


def markov2() -> MarkovModel:
    return new_model([[0.7, 0.3], [0.4, 0.6]], name="markov2")


def markov3() -> MarkovModel:
    return new_model([[0.5, 0.3, 0.2],
                      [0.25, 0.5, 0.25],
                      [0.3, 0.3, 0.4]], alphabet="abc", name="markov3")


def dyadic3() -> MarkovModel:
    return memoryless([0.25, 0.5, 0.25], alphabet="abc", name="dyadic3")


BUILTIN = {
    "uniform2": uniform2,
    "memoryless64": memoryless64,
    "markov2": markov2,
    "markov3": markov3,
    "dyadic3": dyadic3,
}


def resolve(source: str) -> MarkovModel:
    """A builtin name or a path to a model file."""
    if source in BUILTIN:
        return BUILTIN[source]()
    if Path(source).exists():
        return load_model(source)
    raise ModelError(f"unknown model {source!r}: not a builtin ({', '.join(BUILTIN)}) "
                     "and no such file")
