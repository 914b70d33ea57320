"""Deterministic RNG stream derivation.

Every random draw in the simulator comes from a generator keyed by a root
seed plus a structured key (namespace constant, node id, counter, ...).
Streams are therefore independent of scheduling, worker count and host,
which is what makes whole experiment runs byte-reproducible.
"""

from __future__ import annotations

import numpy as np

# Stream namespaces.  Each (seed, namespace, *key) tuple is an independent
# PCG64 stream; never reuse a namespace for a different purpose.
NS_LAYOUT = 1
NS_INIT_MODE = 2
NS_FIRST_WAKE = 3
NS_EVENT = 4
NS_ROUND = 5
NS_POINTS = 6
NS_BOOTSTRAP = 7
NS_TRIAL = 8


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the PCG64 generator for (seed, *key)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """Derive a 64-bit child seed for (seed, *key), usable as a new root."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2)
    return int(lo) | (int(hi) << 32)
