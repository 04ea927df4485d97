from __future__ import annotations

import numpy as np


def spawn_seeds(seed: int, count: int) -> list[int]:
    """Derive `count` independent 64-bit child seeds from one root seed.

    The same (seed, count) always yields the same list, and the i-th child
    does not depend on how many siblings were requested after it.
    """
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def generator(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))
