"""
Counter-based randomness.

Every unordered vertex pair gets its uniform from a hash of
(master seed, replica index, configuration tag, canonical pair key), so the
same pair sees the same uniform in every exploration mode and on every rung of
a ladder. The hash is splitmix64 applied in numpy uint64 arithmetic.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)
_SHIFT11 = np.uint64(11)
_MASK64 = (1 << 64) - 1


def splitmix64(x):
    """Vectorized splitmix64 finalizer (wrapping uint64 arithmetic)"""
    z = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> _SHIFT30)) * _MIX1
        z = (z ^ (z >> _SHIFT27)) * _MIX2
    return z ^ (z >> _SHIFT31)


def replica_key(seed, replica, tag=0):
    """64-bit key of one replica's configuration number `tag`"""
    key = int(splitmix64(np.uint64(int(seed) & _MASK64)))
    key = int(splitmix64(np.uint64(key ^ (int(replica) & _MASK64))))
    return np.uint64(int(splitmix64(np.uint64(key ^ int(tag)))))


def pair_keys(a, b, n_vertices):
    """Canonical key min(a,b) * N + max(a,b) of unordered pairs"""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    with np.errstate(over="ignore"):
        return lo * np.uint64(n_vertices) + hi


def pair_uniforms(key, pairs):
    """Uniforms in (0, 1) for canonical pair keys under a replica key"""
    h = splitmix64(np.asarray(pairs, dtype=np.uint64) ^ np.uint64(key))
    return ((h >> _SHIFT11).astype(np.float64) + 0.5) * 2.0 ** -53


def pair_exponentials(key, pairs):
    """Exp(1) variables -log(1-u); edge open iff beta * J >= value"""
    return -np.log1p(-pair_uniforms(key, pairs))


def philox_generator(seed, replica, stream=0):
    """numpy Generator on an independent Philox stream (skip sampling)"""
    key = int(replica_key(seed, replica, tag=0x5EED + int(stream)))
    return np.random.Generator(np.random.Philox(key=key))
