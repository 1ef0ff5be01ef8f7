"""Named random sub-streams derived from a single experiment seed.

Every stream is ``Generator(PCG64(SeedSequence(seed, spawn_key=(k,))))`` with a
fixed key ``k`` per purpose, so adding a consumer never shifts another stream.
Bit-exact replay is guaranteed for a fixed numpy version; numpy only promises
stability of the raw PCG64 output across releases, not of every distribution
method, so acceptance runs pin ``numpy`` through the lock of the environment.
"""

from __future__ import annotations

import numpy as np

STREAMS = {
    "init": 0,
    "pairing": 1,
    "diffusion": 2,
    "tie": 3,
}


def stream(seed: int, name: str) -> np.random.Generator:
    try:
        key = STREAMS[name]
    except KeyError:
        raise ValueError(f"unknown random stream {name!r}; known: {sorted(STREAMS)}") from None
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(key,))))
