"""Seeded random number streams.

Every stochastic component in this package draws from numpy's PCG64 bit
generator (O'Neill's permuted congruential generator, 128-bit state,
64-bit output; the multiplier/increment constants are documented in the
numpy.random.PCG64 reference). Streams are derived with SeedSequence from
a 64-bit user seed plus small integer tags, so any consumer can be
reproduced in isolation from (seed, tags) alone.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int, *tags: int) -> np.random.Generator:
    """Generator for the stream identified by ``seed`` and integer tags.

    The same (seed, tags) pair always yields the same stream; distinct
    tags yield statistically independent streams.
    """
    entropy = [int(seed) & _MASK64] + [int(t) & _MASK64 for t in tags]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
