"""Counter-based seed splitting.

Every random draw in the package comes from a generator keyed by
(seed, module id, extra counters), so runs are reproducible and any
single draw can be regenerated without replaying earlier ones.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# module ids
RADIUS = 1
EUCLID_BALL = 2
EUCLID_CARVE = 3
L2_SAMPLES = 4
TREAP = 5
ADVERSARY = 6
BENCH = 7
LAAKSO = 8
TESTS = 9


def zigzag(v: int) -> int:
    """Map a signed integer to a nonnegative one (0,-1,1,-2,... -> 0,1,2,3,...)."""
    return 2 * v if v >= 0 else -2 * v - 1


def spawn(seed: int, *keys: int) -> np.random.Generator:
    words = [int(seed) & MASK64]
    for k in keys:
        k = int(k)
        words.append(zigzag(k))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
