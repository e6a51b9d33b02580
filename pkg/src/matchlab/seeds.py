"""Deterministic random streams.

Every sampler in the package draws from a counter-based Philox generator
keyed by a tuple of integers, so any (master seed, sweep cell, replication)
coordinate owns an independent stream that reproduces bit-for-bit.
"""

from __future__ import annotations

import numpy as np


def stream(*key: int) -> np.random.Generator:
    """Return a Philox generator keyed by one or more integers."""
    if not key:
        raise ValueError("stream requires at least one key integer")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
