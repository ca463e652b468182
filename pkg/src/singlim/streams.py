"""Reproducible random streams for parallel Monte Carlo.

Every source of randomness is a counter-based Philox generator keyed by
(master seed, stream id, index).  A path's draws therefore depend only on
its index, never on worker count or scheduling order, and reference-law
streams are structurally independent of path streams because they use a
disjoint stream id.
"""

import numpy as np

__all__ = ["PATH_STREAM", "REFERENCE_STREAM", "NOISE_STREAM", "make_generator"]

# Disjoint stream ids.  Paths and reference-law draws must never share one.
PATH_STREAM = 0
REFERENCE_STREAM = 1
NOISE_STREAM = 2


def make_generator(seed, stream, index=0):
    """Generator for (seed, stream, index), independent of all other triples."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(ss))
