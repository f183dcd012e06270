"""Deterministic stream derivation for replica-parallel Monte Carlo.

Every stochastic routine in the package receives an integer master seed
and derives its streams here.  Replica ``i`` always gets the stream keyed
by ``(master_seed, i)`` through a counter-based generator, so results are
bit-identical no matter how replicas are scheduled or batched.
"""

from __future__ import annotations

import numpy as np

__all__ = ["master_stream", "replica_stream", "derived_stream"]


def master_stream(seed: int) -> np.random.Generator:
    """Top-level stream for a run."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def replica_stream(seed: int, index: int) -> np.random.Generator:
    """Stream for replica ``index``, independent of all other replicas."""
    return derived_stream(seed, index)


def derived_stream(seed: int, *key: int) -> np.random.Generator:
    """Stream keyed by ``(seed, *key)``; distinct keys give independent streams."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
