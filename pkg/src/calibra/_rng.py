"""Reproducible random streams.

All stochastic components draw from counter-based Philox generators keyed by
``(seed, stream)``, so runs are bit-reproducible across platforms and
independent components never share a stream.
"""

from __future__ import annotations

import numpy as np

# Fixed stream ids; adding a new consumer means adding a new id here.
STREAM_FORECAST = 0
STREAM_ADVERSARY = 1
STREAM_PLAY = 2


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream)."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
