"""Counter-based random streams.

A stream is a 64-bit key. The k-th uniform of a stream is a pure hash of
(key, k), so any draw can be recomputed without replaying the ones before
it. Child streams are derived from a parent key and an id, which gives each
replicate, trial and permutation its own stream. Results therefore do not
depend on how the work is batched or distributed over processes.

The mixer is the SplitMix64 finaliser applied twice, once to fold the
counter into the key and once more as output whitening.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)
_SALT = np.uint64(0xD1B54A32D192ED03)


def mix64(x):
    """SplitMix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = np.array(x, dtype=np.uint64, ndmin=1, copy=True)
    shape = np.shape(x)
    with np.errstate(over="ignore"):
        z ^= z >> _S30
        z *= _M1
        z ^= z >> _S27
        z *= _M2
        z ^= z >> _S31
    return z.reshape(shape)


def _id_to_int(i):
    if isinstance(i, (int, np.integer)):
        return int(i) & _MASK
    if isinstance(i, str):
        digest = hashlib.blake2b(i.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"stream ids must be int or str, got {type(i).__name__}")


def child_keys(keys, ids):
    """Derive child keys elementwise from parent ``keys`` and integer ``ids``."""
    keys = np.asarray(keys, dtype=np.uint64)
    ids = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(keys ^ mix64(ids * _GOLDEN + _SALT))


def raw_bits(keys, counters):
    """64 random bits for each (key, counter) pair, broadcasting."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(mix64(keys ^ (counters * _GOLDEN)) + mix64(keys))


def uniforms(keys, counters):
    """Uniform doubles in the open interval (0, 1), one per (key, counter)."""
    bits = raw_bits(keys, counters) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * (2.0 ** -53)


@dataclass(frozen=True)
class RandomStream:
    """An immutable handle on one counter-based stream.

    ``spawn`` derives independent child streams; ``uniform`` reads a block
    of draws starting at a given counter. The handle holds no position, so
    callers that need several blocks pass distinct ``start`` offsets or,
    more commonly, spawn a child per purpose.
    """

    key: int

    @classmethod
    def from_seed(cls, seed):
        if isinstance(seed, RandomStream):
            return seed
        if isinstance(seed, (int, np.integer)) and int(seed) < 0:
            raise ValueError("seed must be a non-negative 64-bit integer")
        return cls(int(mix64(np.uint64(_id_to_int(seed)) ^ _SALT)))

    def spawn(self, *ids):
        key = np.uint64(self.key)
        for i in ids:
            key = child_keys(key, np.uint64(_id_to_int(i)))
        return RandomStream(int(key))

    def spawn_keys(self, ids):
        """Keys of children ``spawn(i)`` for every integer ``i`` in ``ids``."""
        ids = np.asarray(ids, dtype=np.uint64)
        return child_keys(np.uint64(self.key), ids)

    def uniform(self, size, start=0):
        counters = np.arange(start, start + size, dtype=np.uint64)
        return uniforms(np.uint64(self.key), counters)


def as_stream(rng):
    """Accept a RandomStream or an integer seed."""
    if rng is None:
        raise ValueError("a seed or RandomStream is required")
    return RandomStream.from_seed(rng)
