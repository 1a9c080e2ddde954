"""Hierarchical seed derivation.

Every random stream is keyed by a path of integers below the root seed,
e.g. ``(CLUSTERS, c, p)`` for path ``p`` of cluster ``c``, so adding
entities at one level never shifts the draws of earlier ones.
"""

import numpy as np

CLUSTERS = 0
USERS = 1
PATHS = 2
LOS = 3
RUNS = 4


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)))


def child_seed(seed: int, *keys: int) -> int:
    """A derived integer seed, for handing to another generator."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def complex_normal(rng: np.random.Generator, shape, power: float = 1.0) -> np.ndarray:
    """CN(0, power) samples."""
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
