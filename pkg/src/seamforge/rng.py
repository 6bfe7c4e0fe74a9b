"""Named, reproducible RNG substreams derived from one master seed.

Every stochastic component draws from its own substream so any stage of a
run can be replayed in isolation.  Substreams are keyed by a stable string
name plus optional integer indices (epoch number, worker id, ...).
"""

import zlib

import numpy as np


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    """Return a generator for stream `name` under the given master seed."""
    key = (zlib.crc32(name.encode("ascii")),) + tuple(int(i) for i in indices)
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(seq))
