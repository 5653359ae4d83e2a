"""Counter-based random streams.

Every random draw in the package goes through :func:`stream`, which keys a
Philox generator by ``(seed, *key)``.  Streams for different keys are
statistically independent, so a replicate (or a single row of a replicate)
can be regenerated in isolation, in any order, on any worker.
"""

from __future__ import annotations

import numpy as np

# purpose tags used as the first element of a stream key
DATA = 1
GAUSS_H = 2
WISHART = 3
JITTER = 4
MC = 5
AUX = 6


def stream(seed: int, *key: int) -> np.random.Generator:
    if seed < 0 or any(k < 0 for k in key):
        raise ValueError("seed and stream key must be non-negative integers")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def row_block(seed: int, key: tuple[int, ...], rows: int, draw) -> np.ndarray:
    """Stack ``draw(generator)`` over one independent stream per row."""
    return np.stack([draw(stream(seed, *key, r)) for r in range(rows)])
