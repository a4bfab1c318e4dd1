"""Seeded, process-stable hash families.

Everything here is a pure function of (seed, input): the same seed gives
identical values across runs and processes, which is what makes sketch
states exchangeable and experiments replayable.  Two families are
provided:

* ``mix64`` / ``hash64``: a 64-bit finalizer (splitmix64-style) used for
  seed derivation, subsample-level selection and bucket fingerprints.
* ``PairwiseHash``: the classic ``(a*x + b) mod p`` family over the
  Mersenne prime ``p = 2^61 - 1``, used where a stated pairwise
  independence guarantee matters (grid shifts, cell sampling).

Scalar paths use Python ints (explicitly masked to 64 bits); vector
paths use ``numpy.uint64`` arrays and are bit-identical to the scalar
ones.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
MERSENNE61 = (1 << 61) - 1

_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """64-bit avalanche mix of ``x`` (splitmix64 finalizer)."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def hash64(x: int, seed: int) -> int:
    """Seeded 64-bit hash of a 64-bit value."""
    return mix64((x + seed * _GOLDEN) & MASK64)


def derive_seed(seed: int, *tags: int) -> int:
    """Derive a child seed from ``seed`` and integer tags (order matters)."""
    out = mix64(seed ^ _GOLDEN)
    for t in tags:
        out = mix64((out + t * _GOLDEN) & MASK64)
    return out


def mix64_vec(x: np.ndarray) -> np.ndarray:
    """Vector version of :func:`mix64` over a uint64 array."""
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= np.uint64(_M1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_M2)
    x ^= x >> np.uint64(31)
    return x


def hash64_vec(x: np.ndarray, seed: int) -> np.ndarray:
    add = np.uint64((seed * _GOLDEN) & MASK64)
    return mix64_vec(x.astype(np.uint64) + add)


def uniform_in(seed: int, bound: int, tag: int = 0) -> int:
    """Deterministic draw, uniform over ``[0, bound)``.

    Computed as ``floor(u * bound / 2^64)`` for a 64-bit uniform ``u``,
    so the same seed scales consistently across different bounds (used
    for the shared shift of nested grids).
    """
    if bound <= 0:
        raise ValueError("bound must be positive")
    u = hash64(tag, derive_seed(seed, 0x5F17))
    return (u * bound) >> 64


class PairwiseHash:
    """Pairwise-independent hash ``x -> (a*x + b) mod p``, ``p = 2^61 - 1``.

    ``a`` is nonzero; outputs are uniform over ``[0, p)`` and pairwise
    independent over the 64-bit key universe reduced mod p.
    """

    __slots__ = ("a", "b")

    def __init__(self, seed: int):
        self.a = 1 + hash64(1, seed) % (MERSENNE61 - 1)
        self.b = hash64(2, seed) % MERSENNE61

    def value(self, x: int) -> int:
        return (self.a * (x % MERSENNE61) + self.b) % MERSENNE61

    def in_range(self, x: int, n: int) -> int:
        return self.value(x) % n

    def unit(self, x: int) -> float:
        """Map to [0, 1)."""
        return self.value(x) / MERSENNE61

    def value_vec(self, x: np.ndarray) -> np.ndarray:
        xm = x.astype(np.uint64) % np.uint64(MERSENNE61)
        return _modadd61_vec(_modmul61_vec(np.uint64(self.a), xm), np.uint64(self.b))

    def in_range_vec(self, x: np.ndarray, n: int) -> np.ndarray:
        return self.value_vec(x) % np.uint64(n)


def _modadd61_vec(a: np.ndarray, b) -> np.ndarray:
    s = a + b
    p = np.uint64(MERSENNE61)
    return np.where(s >= p, s - p, s)


def _modmul61_vec(a, b: np.ndarray) -> np.ndarray:
    """(a * b) mod (2^61 - 1) with only uint64 intermediates.

    Splits both operands at 32 bits and reduces with 2^61 = 1 (mod p);
    every partial product stays below 2^64.
    """
    p = np.uint64(MERSENNE61)
    a = np.uint64(a) if np.isscalar(a) or np.ndim(a) == 0 else a.astype(np.uint64)
    b = b.astype(np.uint64)
    a_hi = a >> np.uint64(32)
    a_lo = a & np.uint64(0xFFFFFFFF)
    b_hi = b >> np.uint64(32)
    b_lo = b & np.uint64(0xFFFFFFFF)

    # a*b = hh*2^64 + mid*2^32 + ll, with 2^64 = 8 (mod p)
    hh = (a_hi * b_hi) % p
    mid = a_hi * b_lo + a_lo * b_hi          # < 2^62
    ll = a_lo * b_lo                          # < 2^64, wraps ok? no: < (2^32)^2 fits

    out = (hh * np.uint64(8)) % p
    mid_hi = mid >> np.uint64(29)             # * 2^61 -> * 1
    mid_lo = (mid & np.uint64((1 << 29) - 1)) << np.uint64(32)
    out = _modadd61_vec(out, mid_hi % p)
    out = _modadd61_vec(out, mid_lo % p)
    ll_hi = ll >> np.uint64(61)
    ll_lo = ll & np.uint64(MERSENNE61)
    out = _modadd61_vec(out, ll_hi)
    out = _modadd61_vec(out, np.where(ll_lo >= p, ll_lo - p, ll_lo))
    return out
