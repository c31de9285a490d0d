"""Seeded random streams."""

import numpy as np


def as_generator(seed):
    """Return a counter-based (Philox) generator; Generators pass through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
