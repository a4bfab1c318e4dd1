"""Linear sketches over keyed frequency vectors.

Two structures, both linear (mergeable by addition, negatable):

* :class:`SparseRecoverySketch` -- recovers a frequency vector exactly
  whenever its final support has at most ``k`` nonzero keys.  Buckets
  hold ``(count, keysum, fingerprint)``; decoding peels 1-sparse
  buckets until nothing is left.
* :class:`L0Sketch` -- distinct-count (number of nonzero keys) under
  insertions and deletions.  Geometric subsampling levels, each backed
  by an s-sparse recovery structure; estimates come from the deepest
  level whose recovered support falls in a calibrated band, median
  boosted over independent repetitions.

Keys are unsigned 64-bit integers.  All bucket arithmetic is exact:
key sums are kept as split 32-bit halves and fingerprints as lazily
reduced residues mod ``p = 2^61 - 1``, so insert-then-delete of a key
returns the sketch to the all-zero state bit for bit.

State is intended for strict-turnstile use (final frequencies
nonnegative); intermediate negative counts (e.g. merging a negated
sketch) are handled.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .hashing import MASK64, MERSENNE61, derive_seed, hash64, hash64_vec

_FP_SPLIT = 30  # fingerprint residue split: lo 30 bits, hi < 2^31
_KEY_SPLIT = 32

# Fields per bucket, in array order.
_N_FIELDS = 5  # count, keysum_lo, keysum_hi, fp_lo, fp_hi


class SketchParamError(ValueError):
    """Merge/negate across sketches with different parameters or seeds."""


def _rows_for_delta(delta: float) -> int:
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    return int(np.ceil(np.log2(1.0 / delta))) + 2


def _fp_value(key: int, seed: int) -> int:
    return hash64(key, seed) % MERSENNE61


def _scatter(dest: np.ndarray, idx: np.ndarray, weights: np.ndarray,
             max_abs_val: int, abs_delta_sum: int) -> None:
    """Exact ``dest[idx] += weights`` for int64 dest.

    Uses a weighted bincount (float64 internally) when every partial sum
    provably stays below 2^53; falls back to ``np.add.at`` otherwise.
    """
    if abs_delta_sum * max_abs_val < (1 << 53):
        dest += np.bincount(idx, weights=weights.astype(np.float64),
                            minlength=dest.shape[0]).astype(np.int64)
    else:
        np.add.at(dest, idx, weights)


def _peel(state: np.ndarray, k: int, buckets: int, rows: int,
          row_seed1: int, row_seed2: int, fp_seed: int,
          layout_tag: int = 0) -> tuple[dict[int, int], bool]:
    """Peeling decode of one recovery structure.

    ``state`` has shape (_N_FIELDS, rows, buckets) and is consumed
    (pass a copy).  Returns (key -> count, ok); ok means the residual
    state is all zero after peeling and the support fit in ``k``.
    """
    counts, ks_lo, ks_hi, fp_lo, fp_hi = state
    out: dict[int, int] = {}

    pending = set()
    for r in range(rows):
        for b in np.nonzero(counts[r])[0]:
            pending.add((r, int(b)))

    while pending:
        r, b = pending.pop()
        c = int(counts[r, b])
        if c == 0:
            continue
        keysum = (int(ks_hi[r, b]) << _KEY_SPLIT) + int(ks_lo[r, b])
        key, rem = divmod(keysum, c)
        if rem != 0 or not 0 <= key <= MASK64:
            continue
        fp = ((int(fp_hi[r, b]) << _FP_SPLIT) + int(fp_lo[r, b])) % MERSENNE61
        if fp != (c * _fp_value(key, fp_seed)) % MERSENNE61:
            continue
        # Verified 1-sparse: remove this key from every row.
        h1 = hash64(key, row_seed1)
        h2 = hash64(key, row_seed2) | 1
        klo = key & 0xFFFFFFFF
        khi = key >> _KEY_SPLIT
        f = _fp_value(key, fp_seed)
        flo = f & ((1 << _FP_SPLIT) - 1)
        fhi = f >> _FP_SPLIT
        for r2 in range(rows):
            b2 = ((h1 + (layout_tag * rows + r2 + 1) * h2) & MASK64) % buckets
            counts[r2, b2] -= c
            ks_lo[r2, b2] -= c * klo
            ks_hi[r2, b2] -= c * khi
            fp_lo[r2, b2] -= c * flo
            fp_hi[r2, b2] -= c * fhi
            if counts[r2, b2] != 0:
                pending.add((r2, b2))
        out[key] = out.get(key, 0) + c
        if out[key] == 0:
            del out[key]

    ok = not state.any() and len(out) <= k
    return out, ok


class SparseRecoverySketch:
    """Exact k-sparse recovery under turnstile updates.

    ``rows`` defaults to ``ceil(log2(1/delta)) + 2`` and each row has
    ``2k`` buckets.  The decode is exact whenever the final support has
    at most ``k`` keys; larger supports (or the ~2^-61 per-bucket
    fingerprint collision) surface as ``ok=False``.
    """

    def __init__(self, k: int, seed: int, delta: float = 0.25,
                 rows: int | None = None, _alloc: bool = True):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.buckets = 2 * k
        self.delta = delta
        self.rows = rows if rows is not None else _rows_for_delta(delta)
        self.seed = seed
        self._s1 = derive_seed(seed, 1)
        self._s2 = derive_seed(seed, 2)
        self._sf = derive_seed(seed, 3)
        if _alloc:
            self.state = np.zeros((_N_FIELDS, self.rows, self.buckets),
                                  dtype=np.int64)

    def _params(self) -> tuple:
        return (self.k, self.rows, self.seed)

    def update(self, key: int, delta: int) -> None:
        if not 0 <= key <= MASK64:
            raise ValueError("key out of 64-bit range")
        h1 = hash64(key, self._s1)
        h2 = hash64(key, self._s2) | 1
        klo = key & 0xFFFFFFFF
        khi = key >> _KEY_SPLIT
        f = _fp_value(key, self._sf)
        flo = f & ((1 << _FP_SPLIT) - 1)
        fhi = f >> _FP_SPLIT
        st = self.state
        for r in range(self.rows):
            b = ((h1 + (r + 1) * h2) & MASK64) % self.buckets
            st[0, r, b] += delta
            st[1, r, b] += delta * klo
            st[2, r, b] += delta * khi
            st[3, r, b] += delta * flo
            st[4, r, b] += delta * fhi

    def apply_batch(self, keys: np.ndarray, deltas: np.ndarray) -> None:
        """Vectorized sum of per-key updates (order irrelevant: linear)."""
        if len(keys) == 0:
            return
        keys = keys.astype(np.uint64)
        deltas = deltas.astype(np.int64)
        abs_sum = int(np.abs(deltas).sum())
        h1 = hash64_vec(keys, self._s1)
        h2 = hash64_vec(keys, self._s2) | np.uint64(1)
        klo = (keys & np.uint64(0xFFFFFFFF)).astype(np.int64)
        khi = (keys >> np.uint64(_KEY_SPLIT)).astype(np.int64)
        f = hash64_vec(keys, self._sf) % np.uint64(MERSENNE61)
        flo = (f & np.uint64((1 << _FP_SPLIT) - 1)).astype(np.int64)
        fhi = (f >> np.uint64(_FP_SPLIT)).astype(np.int64)
        vals = (deltas, deltas * klo, deltas * khi, deltas * flo, deltas * fhi)
        maxes = (1, 1 << 32, 1 << 32, 1 << _FP_SPLIT, 1 << 31)
        for r in range(self.rows):
            idx = ((h1 + np.uint64(r + 1) * h2) % np.uint64(self.buckets)).astype(np.intp)
            for field in range(_N_FIELDS):
                _scatter(self.state[field, r], idx, vals[field],
                         maxes[field], abs_sum)

    def decode(self) -> tuple[dict[int, int], bool]:
        return _peel(self.state.copy(), self.k, self.buckets, self.rows,
                     self._s1, self._s2, self._sf)

    def is_zero(self) -> bool:
        return not self.state.any()

    def nbytes(self) -> int:
        return self.state.nbytes

    def copy(self) -> "SparseRecoverySketch":
        out = SparseRecoverySketch(self.k, self.seed, self.delta,
                                   self.rows, _alloc=False)
        out.state = self.state.copy()
        return out

    # -- serialization: versioned little-endian frame ------------------

    _MAGIC = b"GSSR"
    _VERSION = 1

    def to_bytes(self) -> bytes:
        head = struct.pack("<4sHIIQd", self._MAGIC, self._VERSION,
                           self.k, self.rows, self.seed, self.delta)
        return head + self.state.astype("<i8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SparseRecoverySketch":
        head_len = struct.calcsize("<4sHIIQd")
        magic, version, k, rows, seed, delta = struct.unpack(
            "<4sHIIQd", data[:head_len])
        if magic != cls._MAGIC or version != cls._VERSION:
            raise ValueError("bad sparse-recovery frame")
        out = cls(k, seed, delta, rows, _alloc=False)
        arr = np.frombuffer(data[head_len:], dtype="<i8").astype(np.int64)
        out.state = arr.reshape((_N_FIELDS, rows, 2 * k)).copy()
        return out


class L0Sketch:
    """(1 +/- eps) distinct-count estimator for strict turnstile streams.

    ``levels`` subsample levels; a key survives level ``l`` with
    probability ``2^-l`` (nested across levels).  Each (repetition,
    level) holds an s-sparse recovery structure, ``s = 16/eps^2`` by
    default.  Per repetition the estimate comes from the deepest level
    whose recovered support lies in ``[s/4, s]``, rescaled by ``2^l``;
    level 0 decoding exactly wins outright when it succeeds.  The final
    answer is the median over repetitions.
    """

    def __init__(self, eps: float = 0.1, reps: int = 32,
                 levels: int = 20, seed: int = 0,
                 s: int | None = None, rows: int = 2,
                 _alloc: bool = True):
        if not 0 < eps < 1:
            raise ValueError("eps must be in (0, 1)")
        self.eps = eps
        self.reps = reps
        self.levels = levels
        self.seed = seed
        self.s = s if s is not None else int(np.ceil(16.0 / (eps * eps)))
        self.rows = rows
        self.buckets = 2 * self.s
        self._lvl_seeds = [derive_seed(seed, 10, r) for r in range(reps)]
        self._s1 = [derive_seed(seed, 11, r) for r in range(reps)]
        self._s2 = [derive_seed(seed, 12, r) for r in range(reps)]
        self._sf = derive_seed(seed, 13)
        if _alloc:
            self.state = np.zeros(
                (_N_FIELDS, reps, levels + 1, rows, self.buckets),
                dtype=np.int64)

    def _params(self) -> tuple:
        return (self.eps, self.reps, self.levels, self.s, self.rows, self.seed)

    def update(self, key: int, delta: int) -> None:
        self.apply_batch(np.array([key], dtype=np.uint64),
                         np.array([delta], dtype=np.int64))

    def apply_batch(self, keys: np.ndarray, deltas: np.ndarray) -> None:
        if len(keys) == 0:
            return
        keys = keys.astype(np.uint64)
        deltas = deltas.astype(np.int64)
        abs_sum = int(np.abs(deltas).sum())
        klo = (keys & np.uint64(0xFFFFFFFF)).astype(np.int64)
        khi = (keys >> np.uint64(_KEY_SPLIT)).astype(np.int64)
        f = hash64_vec(keys, self._sf) % np.uint64(MERSENNE61)
        flo = (f & np.uint64((1 << _FP_SPLIT) - 1)).astype(np.int64)
        fhi = (f >> np.uint64(_FP_SPLIT)).astype(np.int64)
        vals = (deltas, deltas * klo, deltas * khi, deltas * flo, deltas * fhi)
        maxes = (1, 1 << 32, 1 << 32, 1 << _FP_SPLIT, 1 << 31)
        one = np.uint64(1)
        for rep in range(self.reps):
            h = hash64_vec(keys, self._lvl_seeds[rep])
            tz = np.bitwise_count((h & (~h + one)) - one)
            h1 = hash64_vec(keys, self._s1[rep])
            h2 = hash64_vec(keys, self._s2[rep]) | one
            alive = np.arange(len(keys))
            for lvl in range(self.levels + 1):
                if lvl > 0:
                    alive = alive[tz[alive] >= lvl]
                    if len(alive) == 0:
                        break
                for r in range(self.rows):
                    mult = np.uint64(lvl * self.rows + r + 1)
                    idx = ((h1[alive] + mult * h2[alive])
                           % np.uint64(self.buckets)).astype(np.intp)
                    for field in range(_N_FIELDS):
                        _scatter(self.state[field, rep, lvl, r], idx,
                                 vals[field][alive], maxes[field], abs_sum)

    def _rep_estimate(self, rep: int) -> tuple[int, bool]:
        """Estimate from one repetition; returns (value, low_confidence)."""
        def decode_level(lvl: int) -> tuple[dict[int, int], bool]:
            return _peel(self.state[:, rep, lvl].copy(), self.s,
                         self.buckets, self.rows,
                         self._s1[rep], self._s2[rep], self._sf,
                         layout_tag=lvl)

        m0, ok0 = decode_level(0)
        if ok0:
            return len(m0), False
        for lvl in range(self.levels, 0, -1):
            m, ok = decode_level(lvl)
            if ok and self.s // 4 <= len(m) <= self.s:
                return len(m) << lvl, False
        return 0, True

    def estimate_detailed(self) -> tuple[int, bool]:
        vals = []
        flagged = 0
        for rep in range(self.reps):
            v, low = self._rep_estimate(rep)
            vals.append(v)
            flagged += low
        vals.sort()
        n = len(vals)
        med = vals[n // 2] if n % 2 else (vals[n // 2 - 1] + vals[n // 2]) // 2
        return med, flagged * 2 > n

    def estimate(self) -> int:
        return self.estimate_detailed()[0]

    def is_zero(self) -> bool:
        return not self.state.any()

    def nbytes(self) -> int:
        return self.state.nbytes

    def copy(self) -> "L0Sketch":
        out = L0Sketch(self.eps, self.reps, self.levels, self.seed,
                       self.s, self.rows, _alloc=False)
        out.state = self.state.copy()
        return out

    _MAGIC = b"GSL0"
    _VERSION = 1

    def to_bytes(self) -> bytes:
        head = struct.pack("<4sHdIIIIQ", self._MAGIC, self._VERSION,
                           self.eps, self.reps, self.levels, self.s,
                           self.rows, self.seed)
        return head + self.state.astype("<i8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "L0Sketch":
        head_len = struct.calcsize("<4sHdIIIIQ")
        magic, version, eps, reps, levels, s, rows, seed = struct.unpack(
            "<4sHdIIIIQ", data[:head_len])
        if magic != cls._MAGIC or version != cls._VERSION:
            raise ValueError("bad l0 frame")
        out = cls(eps, reps, levels, seed, s, rows, _alloc=False)
        arr = np.frombuffer(data[head_len:], dtype="<i8").astype(np.int64)
        out.state = arr.reshape(
            (_N_FIELDS, reps, levels + 1, rows, 2 * s)).copy()
        return out


def merge(a, b):
    """Sketch of the concatenated streams. Parameters and seeds must match."""
    if type(a) is not type(b) or a._params() != b._params():
        raise SketchParamError("cannot merge sketches with different parameters")
    out = a.copy()
    out.state += b.state
    return out


def negate(a):
    """Sketch whose updates are the negation of ``a``'s (for referee-side deletes)."""
    out = a.copy()
    np.negative(out.state, out=out.state)
    return out
