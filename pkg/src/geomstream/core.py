"""Shared estimator core for max-weight cell partitions.

Both the unit-interval and unit-disk estimators reduce to the same
problem: shapes are snapped to cells; cells are split into a few parts
(grid parities, packing classes) such that within a part, distinct
cells are conflict-free and only the maximum-weight shape of each cell
can contribute.  The optimum of a part is then
``sum over nonempty cells of the cell's max weight``, which this core
estimates two ways:

* a coarse estimate from distinct-count sketches over geometric weight
  classes (base 3/2), and
* a refined estimate that subsamples cells at geometrically decreasing
  rates per weight class (base 1+eps), recovers the survivors exactly
  with sparse recovery keyed by (cell, weight class), classifies each
  recovered cell by its true max class, and scales back up.

The refined path runs one branch per power-of-two guess of the part
optimum; the branch actually used is picked after the stream from the
coarse estimate.  Nested subsampling lets branches share structures:
the rate for class ``i`` under guess ``2^g`` is quantized to ``2^-m``
and one structure serves every branch mapping to the same depth ``m``.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .hashing import derive_seed, hash64_vec
from .reporting import EstimateReport, PartReport
from .sketch import L0Sketch, SparseRecoverySketch

_FLUSH_AT = 4096
_NAIVE_BASE = 1.5


@dataclass
class SamplingConfig:
    """Tunable constants; everything not pinned by a stated guarantee.

    ``rate_constant`` scales the per-class sampling rate
    ``min(1, rate_constant * (1+eps)^i * log2(n_hint) / (eps^2 * 2^g))``
    (quantized to powers of two).  ``k_budget`` is the sparse-recovery
    budget per substream; overflowing branches fail and fall back to
    the next larger guess.  ``depth_cap`` bounds how many subsampling
    depths per weight class are kept live (shallowest evicted first),
    which pins peak memory independently of the stream length.
    """
    eps: float
    n_hint: int
    w_max: int
    seed: int = 0
    rate_constant: float = 2.0
    k_budget: int = 160
    sr_delta: float = 0.25
    l0_s: int = 64
    l0_reps: int = 3
    l0_rows: int = 2
    l0_levels: int | None = None
    depth_cap: int = 8
    rescale_pow: int = 1
    naive_scale: float | None = None  # override the 2/(9(1+eps)) naive factor

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise ValueError("eps must be in (0, 1/2)")
        if self.n_hint < 1 or self.w_max < 1:
            raise ValueError("n_hint and w_max must be >= 1")
        if self.l0_levels is None:
            self.l0_levels = max(4, math.ceil(math.log2(max(self.n_hint, 2))) + 3)


class ClassTable:
    """Geometric weight classes [base^i, base^(i+1)); integer weights.

    No power of 3/2 or of any 1+eps < 2 with eps in (0, 1/2) is an
    integer, so integer weights never sit on a class boundary and the
    float thresholds are exact for classification.
    """

    def __init__(self, base: float, w_max: int):
        self.base = base
        self.count = max(1, math.floor(math.log(w_max, base)) + 1)
        self.powers = [base ** i for i in range(self.count + 1)]

    def class_of(self, w: int) -> int:
        return bisect_right(self.powers, w) - 1

    def class_of_vec(self, ws: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.powers), ws, side="right") - 1

    def top(self, i: int) -> float:
        return self.powers[i + 1]


class _Part:
    """Sketch state for one conflict-free part."""

    def __init__(self, cfg: SamplingConfig, part: int, sampling: bool,
                 naive_classes: ClassTable, eps_classes: ClassTable,
                 max_depth: list[int] | None = None):
        self.cfg = cfg
        self.part = part
        self.sampling = sampling
        self.naive_classes = naive_classes
        self.eps_classes = eps_classes
        self.max_depth = max_depth or [62] * eps_classes.count
        self.naive_l0: dict[int, L0Sketch] = {}
        self.eps_l0: dict[int, L0Sketch] = {}
        self.structs: dict[int, dict[int, SparseRecoverySketch]] = {}
        self.depth_floor: dict[int, int] = {}
        self.class_seeds = [derive_seed(cfg.seed, 0xCE11, part, i)
                            for i in range(eps_classes.count)]
        self.buf_cells: list[int] = []
        self.buf_w: list[int] = []
        self.buf_sign: list[int] = []

    # -- sketch factories ----------------------------------------------

    def _new_l0(self, tag: int, idx: int) -> L0Sketch:
        c = self.cfg
        return L0Sketch(eps=c.eps, reps=c.l0_reps, levels=c.l0_levels,
                        seed=derive_seed(c.seed, tag, self.part, idx),
                        s=c.l0_s, rows=c.l0_rows)

    def _structure(self, i: int, m: int) -> SparseRecoverySketch | None:
        """Structure for (class i, depth m), honoring the depth budget."""
        by_depth = self.structs.setdefault(i, {})
        sk = by_depth.get(m)
        if sk is not None:
            return sk
        if m < self.depth_floor.get(i, 0):
            return None
        if len(by_depth) >= self.cfg.depth_cap:
            shallowest = min(by_depth)
            if m < shallowest:
                self.depth_floor[i] = max(self.depth_floor.get(i, 0), m + 1)
                return None
            del by_depth[shallowest]
            self.depth_floor[i] = max(self.depth_floor.get(i, 0),
                                      shallowest + 1)
        sk = SparseRecoverySketch(
            self.cfg.k_budget,
            seed=derive_seed(self.cfg.seed, 0x57C7, self.part, i, m),
            delta=self.cfg.sr_delta)
        by_depth[m] = sk
        return sk

    # -- ingest ---------------------------------------------------------

    def add(self, cell_key: int, weight: int, sign: int) -> None:
        self.buf_cells.append(cell_key)
        self.buf_w.append(weight)
        self.buf_sign.append(sign)
        if len(self.buf_cells) >= _FLUSH_AT:
            self.flush()

    def flush(self) -> None:
        if not self.buf_cells:
            return
        cells = np.array(self.buf_cells, dtype=np.uint64)
        ws = np.array(self.buf_w, dtype=np.int64)
        signs = np.array(self.buf_sign, dtype=np.int64)
        self.buf_cells.clear()
        self.buf_w.clear()
        self.buf_sign.clear()

        ncls = self.naive_classes.class_of_vec(ws)
        for j in np.unique(ncls):
            sel = ncls == j
            sk = self.naive_l0.get(int(j))
            if sk is None:
                sk = self.naive_l0[int(j)] = self._new_l0(0xA0, int(j))
            sk.apply_batch(cells[sel], signs[sel])

        if not self.sampling:
            return
        ecls = self.eps_classes.class_of_vec(ws)
        for j in np.unique(ecls):
            sel = ecls == j
            sk = self.eps_l0.get(int(j))
            if sk is None:
                sk = self.eps_l0[int(j)] = self._new_l0(0xB0, int(j))
            sk.apply_batch(cells[sel], signs[sel])

        keys_all = (cells << np.uint64(6)) | ecls.astype(np.uint64)
        for i in range(self.eps_classes.count):
            elig = np.nonzero(ecls >= i)[0]
            if len(elig) == 0:
                continue
            u = hash64_vec(cells[elig], self.class_seeds[i])
            keys = keys_all[elig]
            sgn = signs[elig]
            alive = np.arange(len(elig))
            # depths beyond what the deepest guess branch uses are never read
            for m in range(self.max_depth[i] + 1):
                if m > 0:
                    thr = np.uint64(1) << np.uint64(64 - m)
                    alive = alive[u[alive] < thr]
                    if len(alive) == 0:
                        break
                sk = self._structure(i, m)
                if sk is not None:
                    sk.apply_batch(keys[alive], sgn[alive])

    # -- accounting ------------------------------------------------------

    def nbytes(self) -> int:
        total = sum(s.nbytes() for s in self.naive_l0.values())
        total += sum(s.nbytes() for s in self.eps_l0.values())
        for by_depth in self.structs.values():
            total += sum(s.nbytes() for s in by_depth.values())
        return total


class CellPartitionEstimator:
    """Estimator over ``n_parts`` conflict-free cell partitions.

    Callers snap each shape to ``(part, cell_key, weight, sign)`` and
    feed it through :meth:`add`; :meth:`finalize` returns the estimate
    ``max over parts`` with full per-part diagnostics.
    """

    def __init__(self, cfg: SamplingConfig, n_parts: int, sampling: bool = True):
        self.cfg = cfg
        self.sampling = sampling
        self.naive_classes = ClassTable(_NAIVE_BASE, cfg.w_max)
        self.eps_classes = ClassTable(1.0 + cfg.eps, cfg.w_max)
        if self.eps_classes.count > 63:
            raise ValueError("weight-class count exceeds key encoding budget")
        self.g_max = math.ceil(math.log2(max(2, cfg.n_hint * cfg.w_max))) + 1
        # floor(log2(.)) of the un-clipped rate numerator, per class
        self._rate_log = [
            math.floor(math.log2(max(
                1.0, cfg.rate_constant * (1.0 + cfg.eps) ** i
                * math.log2(max(cfg.n_hint, 2)) / (cfg.eps * cfg.eps))))
            for i in range(self.eps_classes.count)]
        max_depth = [self.depth_of(i, self.g_max)
                     for i in range(self.eps_classes.count)]
        self.parts = [_Part(cfg, p, sampling, self.naive_classes,
                            self.eps_classes, max_depth)
                      for p in range(n_parts)]

    def depth_of(self, i: int, g: int) -> int:
        """Subsample depth for class i under guess 2^g (rate 2^-depth)."""
        return max(0, g - self._rate_log[i])

    def add(self, part: int, cell_key: int, weight: int, sign: int) -> None:
        if weight < 1:
            raise ValueError("weights must be >= 1")
        if weight > self.cfg.w_max:
            raise ValueError(f"weight {weight} exceeds configured bound "
                             f"{self.cfg.w_max}")
        self.parts[part].add(cell_key, weight, sign)

    def flush(self) -> None:
        for p in self.parts:
            p.flush()

    # -- estimation -------------------------------------------------------

    def _naive_part(self, part: _Part) -> float:
        scale = self.cfg.naive_scale
        if scale is None:
            scale = 2.0 / (9.0 * (1.0 + self.cfg.eps))
        total = 0.0
        for j, sk in part.naive_l0.items():
            total += self.naive_classes.top(j) * sk.estimate()
        return scale * total

    def naive_report(self) -> EstimateReport:
        self.flush()
        parts = []
        for p in self.parts:
            pr = PartReport(part=p.part, naive=self._naive_part(p))
            pr.estimate = pr.naive
            parts.append(pr)
        best = max((pr.estimate for pr in parts), default=0.0)
        return EstimateReport(best, parts=parts)

    def _decode_class_count(self, part: _Part, i: int, m: int):
        """Recovered count of sampled cells whose max class is exactly i.

        Returns (count, ok); ok=False marks an unusable branch (sparse
        recovery overflow or an evicted depth).
        """
        if m < part.depth_floor.get(i, 0):
            return 0, False
        by_depth = part.structs.get(i, {})
        sk = by_depth.get(m)
        if sk is None:
            return 0, True  # nothing ever landed: legitimately empty
        decoded, ok = sk.decode()
        if not ok:
            return 0, False
        max_class: dict[int, int] = {}
        for key, cnt in decoded.items():
            if cnt <= 0:
                continue
            cell = key >> 6
            cls = key & 0x3F
            if max_class.get(cell, -1) < cls:
                max_class[cell] = cls
        return sum(1 for c in max_class.values() if c == i), ok

    def _sampling_part(self, part: _Part, pr: PartReport) -> None:
        cfg = self.cfg
        eps = cfg.eps
        b = self.eps_classes.count
        x_by_class = {i: float(sk.estimate())
                      for i, sk in part.eps_l0.items()}
        pr.count_by_class = x_by_class
        x_total = sum(x_by_class.values())
        if x_total <= 0:
            pr.estimate = 0.0
            return
        for i, x_i in x_by_class.items():
            pr.threshold_by_class[i] = (
                eps * x_total / (self.eps_classes.top(i) * b))

        v = 9.0 * (1.0 + eps) * pr.naive
        g_start = max(0, math.ceil(math.log2(v))) if v >= 1.0 else 0
        contributing = [i for i, x_i in x_by_class.items()
                        if x_i >= pr.threshold_by_class[i]]

        for g in range(min(g_start, self.g_max), self.g_max + 1):
            y_by_class = {}
            ok_branch = True
            for i in contributing:
                m = self.depth_of(i, g)
                count, ok = self._decode_class_count(part, i, m)
                if not ok:
                    ok_branch = False
                    break
                y_by_class[i] = (self.eps_classes.top(i) * count
                                 * float(2 ** m))
            if ok_branch:
                pr.branch = g
                pr.y_by_class = y_by_class
                pr.estimate = (sum(y_by_class.values())
                               / (1.0 + eps) ** cfg.rescale_pow)
                return
            pr.failed_branches.append(g)
        pr.flags.append("degraded:all-branches-failed")
        pr.estimate = pr.naive

    def finalize(self) -> EstimateReport:
        self.flush()
        parts = []
        for p in self.parts:
            pr = PartReport(part=p.part, naive=self._naive_part(p))
            if self.sampling:
                self._sampling_part(p, pr)
            else:
                pr.estimate = pr.naive
            parts.append(pr)
        best = max((pr.estimate for pr in parts), default=0.0)
        flags = sorted({f for pr in parts for f in pr.flags})
        return EstimateReport(best, flags=flags, parts=parts)

    def nbytes(self) -> int:
        return sum(p.nbytes() for p in self.parts)
