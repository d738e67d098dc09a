"""Seeded random streams keyed by integer tuples."""

import numpy as np


def make_rng(*keys) -> np.random.Generator:
    """Counter-based (Philox) generator whose stream depends only on ``keys``.

    ``make_rng(seed, cell, trial)`` gives every trial its own reproducible
    stream, independent of execution order or worker count.
    """
    ints = [int(k) for k in keys]
    if any(k < 0 for k in ints):
        raise ValueError("rng keys must be non-negative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(ints)))


def as_rng(seed) -> np.random.Generator:
    """Accept a Generator, an int key or a tuple of int keys."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return make_rng(*seed)
    return make_rng(seed)
