"""Keyed random streams.

Every random draw in dsmve comes from a Philox (counter-based) bit
generator keyed by (seed, purpose, stream_id). Streams for different
particles never share state, so they can be generated in any order or
in parallel and replay bit-identically.
"""

import logging

import numpy as np

from dsmve.errors import UsageError

log = logging.getLogger("dsmve.rng_util")

# purpose keys split the seed space between independent uses
STREAM_NOISE = 0x6E6F697365
STREAM_INITIAL_PATH = 0x786930


def keyed_generator(seed: int, stream_id: int, purpose: int = STREAM_NOISE) -> np.random.Generator:
    """Returns a fresh Generator positioned at counter 0 of the
    (seed, purpose, stream_id) stream
    """
    if seed < 0 or stream_id < 0:
        raise UsageError(f"seed and stream_id must be non-negative got {seed} and {stream_id}")
    seed_seq = np.random.SeedSequence(entropy=[int(seed), int(purpose), int(stream_id)])
    return np.random.Generator(np.random.Philox(seed_seq))


def standard_normals(seed: int, stream_id: int, size: int, purpose: int = STREAM_NOISE) -> np.ndarray:
    """The Gaussian transform shared by every noise generator (numpy's
    ziggurat standard_normal)
    """
    return keyed_generator(seed, stream_id, purpose).standard_normal(size)


def replication_seed(seed: int, replication: int) -> int:
    "seed for the replication-th independent repeat of a study"
    return int(seed) + int(replication)
