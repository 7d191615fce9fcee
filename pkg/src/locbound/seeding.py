"""Seed derivation for reproducible, schedule-independent Monte Carlo.

Every random stream is a numpy ``Philox`` generator keyed by a
``SeedSequence(entropy=master_seed, spawn_key=(purpose, *indices))``.  The
child seed of trial ``t`` therefore depends only on ``(master_seed, t)`` and
not on which worker runs it or in what order.
"""
from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "numpy.random.Philox (4x64, counter-based) keyed by SeedSequence(master_seed, spawn_key=(purpose, *indices))"

# spawn_key purposes
FIELD = 1
NOISE = 2

_MASK64 = (1 << 64) - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def generator(seed, *key) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(master_seed, *key) -> int:
    """64-bit child seed, a pure function of ``(master_seed, *key)``."""
    ss = np.random.SeedSequence(check_seed(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])
