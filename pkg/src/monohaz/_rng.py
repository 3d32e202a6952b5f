"""Deterministic counter-based random streams.

Every random draw in the package comes from a single 64-bit hash mix
(the splitmix64 finalizer), so results depend only on seeds and indices,
never on generation order, chunking, or the number of worker processes.

A stream is identified by a 64-bit seed.  Its k-th raw output is

    out(seed, k) = mix64((seed + (k + 1) * GOLDEN) mod 2**64)

with GOLDEN = 0x9E3779B97F4A7C15 and mix64 the splitmix64 finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

Substreams (one per observation, per bootstrap replicate, ...) are opened
by re-seeding with an output of the parent stream.  Independent uses of
the same user-facing seed are separated by small integer tags via
`derive_seed`, so e.g. a sample split and a bootstrap draw never read
the same stream.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLD_INT = 0x9E3779B97F4A7C15
_M1_INT = 0xBF58476D1CE4E5B9
_M2_INT = 0x94D049BB133111EB

GOLDEN = np.uint64(_GOLD_INT)
_M1 = np.uint64(_M1_INT)
_M2 = np.uint64(_M2_INT)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)

# 2**-53; raw 53-bit mantissas map to [0, 1)
_U53 = 1.0 / (1 << 53)
# half of the smallest step above, used to shift into the open interval (0, 1)
_HALF_ULP = 1.0 / (1 << 54)


def mix64(z: np.ndarray) -> np.ndarray:
    """Splitmix64 finalizer, vectorized over uint64 arrays."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)


def _mix_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1_INT) & _MASK
    z = ((z ^ (z >> 27)) * _M2_INT) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, *tags: int) -> int:
    """Open an independent stream for a tagged use of `seed`.

    Chained so that derive_seed(s, a, b) != derive_seed(s, b, a) in
    general; each step is a bijection of the running state for fixed tag.
    """
    s = seed & _MASK
    for t in tags:
        s = _mix_int(((s + _GOLD_INT) & _MASK) ^ _mix_int((t & _MASK) + _GOLD_INT))
    return s


def stream_values(seed: int, index) -> np.ndarray:
    """Raw uint64 outputs of the stream `seed` at the given indices."""
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(np.uint64(seed & _MASK) + (idx + np.uint64(1)) * GOLDEN)


def unit(values: np.ndarray) -> np.ndarray:
    """Map raw outputs to floats in the half-open interval [0, 1)."""
    return (np.asarray(values, dtype=np.uint64) >> _S11).astype(np.float64) * _U53


def unit_open(values: np.ndarray) -> np.ndarray:
    """Map raw outputs to floats in the open interval (0, 1)."""
    return unit(values) + _HALF_ULP


def observation_uniforms(seed: int, n: int, ndraws: int) -> np.ndarray:
    """(n, ndraws) uniforms in [0, 1), one substream per observation.

    Row i is read from the substream seeded by out(seed, i), so the
    matrix is identical however rows are generated or partitioned.
    """
    subs = stream_values(seed, np.arange(n))
    ks = (np.arange(ndraws, dtype=np.uint64) + np.uint64(1))
    with np.errstate(over="ignore"):
        vals = mix64(subs[:, None] + ks[None, :] * GOLDEN)
    return unit(vals)


def stream_uniforms(seed: int, index) -> np.ndarray:
    """Uniforms in [0, 1) at the given indices of stream `seed`."""
    return unit(stream_values(seed, index))
