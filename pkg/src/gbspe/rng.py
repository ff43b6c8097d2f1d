"""Deterministic, splittable random streams.

Every parallel task derives its own generator from (master seed, task key),
so results never depend on thread scheduling.
"""

from __future__ import annotations

import numpy as np

# Stream namespaces.  Keeping them distinct guarantees that e.g. the side
# stream used to estimate the eigenvalue-density normalization never
# overlaps the per-trial streams.
NS_OUTER = 0
NS_SIDE = 1
NS_REPLICA = 2


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Return a Generator for the stream identified by (master_seed, *key)."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))
