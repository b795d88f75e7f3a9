"""Counter-based deterministic pseudorandomness (SplitMix64).

Every random quantity in this package is a pure function of a 64-bit
seed and an integer counter:

* ``derive_seed(master, k)`` hashes ``master XOR k*GOLDEN`` through the
  SplitMix64 finalizer, yielding an independent seed for item ``k``;
* the output stream of a seed is ``finalize(seed + j*GOLDEN)`` for
  ``j = 1, 2, ...``, which is exactly the standard SplitMix64 sequence;
* uniforms take the top 53 bits of an output word, gaussians come from
  the Box-Muller transform applied to one pair of output words.

Counter-based derivation gives O(1) random access to the randomness of
any step, which is what lets a trained model store seeds instead of
realized feature vectors.  The scalar (python int) and vectorized
(numpy uint64) paths implement the same arithmetic mod 2**64 and
produce bit-identical results.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U_GOLDEN = np.uint64(GOLDEN)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)

_INV_2_53 = 2.0**-53
TWO_PI = 2.0 * np.pi


def mix64(value: int) -> int:
    """SplitMix64 finalizer on a python integer (mod 2**64)."""
    z = value & _MASK
    z ^= z >> 30
    z = (z * _MIX1) & _MASK
    z ^= z >> 27
    z = (z * _MIX2) & _MASK
    z ^= z >> 31
    return z


def mix64_array(values: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array."""
    z = values.astype(np.uint64, copy=True)
    z ^= z >> _S30
    z *= _U_MIX1
    z ^= z >> _S27
    z *= _U_MIX2
    z ^= z >> _S31
    return z


def derive_seed(master: int, counter: int) -> int:
    """Per-item seed: finalize(master XOR counter*GOLDEN)."""
    return mix64((master & _MASK) ^ ((counter * GOLDEN) & _MASK))


def derive_seeds(master: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized :func:`derive_seed` over an integer array of counters."""
    c = np.asarray(counters).astype(np.uint64)
    return mix64_array(np.uint64(master & _MASK) ^ (c * _U_GOLDEN))


def raw_stream(seed: int, n: int) -> np.ndarray:
    """Output words 1..n of the SplitMix64 sequence started at ``seed``."""
    j = np.arange(1, n + 1, dtype=np.uint64)
    return mix64_array(np.uint64(seed & _MASK) + j * _U_GOLDEN)


def raw_block(seeds: np.ndarray, length: int) -> np.ndarray:
    """Matrix of output words: row i holds words 1..length of seeds[i]."""
    s = np.asarray(seeds).astype(np.uint64)
    j = np.arange(1, length + 1, dtype=np.uint64)
    return mix64_array(s[:, None] + j[None, :] * _U_GOLDEN)


def uniform53(raws: np.ndarray) -> np.ndarray:
    """Map uint64 words to doubles in [0, 1) using the top 53 bits."""
    return (raws >> _S11).astype(np.float64) * _INV_2_53


def uniform53_open(raws: np.ndarray) -> np.ndarray:
    """Map uint64 words to doubles in (0, 1] (safe as a log argument)."""
    return ((raws >> _S11).astype(np.float64) + 1.0) * _INV_2_53


def gauss_from_raws(raw_a: np.ndarray, raw_b: np.ndarray):
    """Box-Muller pair: two independent standard gaussians per word pair."""
    u1 = uniform53_open(raw_a)
    u2 = uniform53(raw_b)
    r = np.sqrt(-2.0 * np.log(u1))
    ang = TWO_PI * u2
    return r * np.cos(ang), r * np.sin(ang)


def uniforms(seed: int, n: int) -> np.ndarray:
    """First ``n`` uniforms in [0, 1) of the stream of ``seed``."""
    return uniform53(raw_stream(seed, n))


def gaussians(seed: int, n: int) -> np.ndarray:
    """First ``n`` standard gaussians of the stream of ``seed``.

    Consumes ``2*ceil(n/2)`` output words in pairs (words 1&2 give the
    first two gaussians, and so on).
    """
    npairs = (n + 1) // 2
    raws = raw_stream(seed, 2 * npairs)
    z0, z1 = gauss_from_raws(raws[0::2], raws[1::2])
    out = np.empty(2 * npairs)
    out[0::2] = z0
    out[1::2] = z1
    return out[:n]
