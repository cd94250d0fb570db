"""Deterministic random-stream derivation from a single master seed.

Every source of randomness in a run is a keyed substream of the master seed,
so adding clients or swapping schedulers never perturbs the draws other
components see.
"""

from __future__ import annotations

import numpy as np

STREAM_CLIENT = 0
STREAM_SCHEDULER = 1
STREAM_WALK = 2
STREAM_MODELS = 3


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator keyed by ``(seed, *key)``, stable across runs."""
    if seed < 0 or any(k < 0 for k in key):
        raise ValueError("seed and stream keys must be non-negative integers")
    return np.random.default_rng(np.random.SeedSequence(entropy=[seed, *key]))
